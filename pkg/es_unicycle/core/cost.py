"""
Time-varying quadratic cost J(x, t) = kappa * |x - gamma(t)|^2 and its sublevel sets.
"""

import math
from typing import Tuple

from pydantic import BaseModel, Field

from es_unicycle.core.target_path import TargetPath
from es_unicycle.utils.schema import Vec2


class CostFunction(BaseModel):
    """Quadratic cost centered on a moving target."""

    kappa: float = Field(..., gt=0.0, description="Cost curvature")
    path: TargetPath

    class Config:
        allow_mutation = False

    def value(self, x1: float, x2: float, t: float) -> float:
        g1, g2 = self.path.position(t)
        d1 = x1 - g1
        d2 = x2 - g2
        return self.kappa * (d1 * d1 + d2 * d2)

    def gradient(self, x1: float, x2: float, t: float) -> Tuple[float, float]:
        g1, g2 = self.path.position(t)
        c = 2.0 * self.kappa
        return c * (x1 - g1), c * (x2 - g2)

    def distance(self, x1: float, x2: float, t: float) -> float:
        """Tracking distance |x - gamma(t)|."""
        g1, g2 = self.path.position(t)
        return math.hypot(x1 - g1, x2 - g2)


class LevelSetFamily(BaseModel):
    """Sublevel sets {x : J(x, t) <= lambda}; closed disks around gamma(t)."""

    cost: CostFunction
    lambda_: float = Field(..., gt=0.0, alias="lambda")

    class Config:
        allow_mutation = False
        allow_population_by_field_name = True

    @property
    def radius(self) -> float:
        return math.sqrt(self.lambda_ / self.cost.kappa)

    def contains(self, x: Vec2, t: float) -> bool:
        return self.cost.value(x.x1, x.x2, t) <= self.lambda_

    def distance(self, x1: float, x2: float, t: float) -> float:
        """Euclidean distance from x to the disk at time t (0 inside)."""
        return max(0.0, self.cost.distance(x1, x2, t) - self.radius)


def eval_cost(cost: CostFunction, x: Vec2, t: float) -> float:
    """kappa * |x - gamma(t)|^2."""
    return cost.value(x.x1, x.x2, t)


def cost_gradient(cost: CostFunction, x: Vec2, t: float) -> Vec2:
    """2 kappa (x - gamma(t))."""
    g1, g2 = cost.gradient(x.x1, x.x2, t)
    return Vec2(x1=g1, x2=g2)
