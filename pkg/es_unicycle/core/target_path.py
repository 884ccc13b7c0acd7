"""
Moving extremum paths gamma(t) and their speed bounds.
"""

import bisect
import math
from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, root_validator, validator

from es_unicycle.utils.exceptions import ParameterError, RangeError
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Vec2

logger = get_logger(__name__)

# Safety margin applied to finite-difference speed estimates of tabulated paths.
TABULATED_SPEED_MARGIN = 1.1


class PathKind(str, Enum):
    """Supported target path families."""
    CONSTANT = "constant"
    LINE_SINE = "line_sine"
    FIGURE_EIGHT = "figure_eight"
    TABULATED = "tabulated"


class LineSineParams(BaseModel):
    """gamma(t) = (rate * t, amplitude * sin(frequency * t))."""

    rate: float = Field(default=0.1)
    amplitude: float = Field(default=1.0)
    frequency: float = Field(default=0.1)

    class Config:
        allow_mutation = False


class FigureEightParams(BaseModel):
    """gamma(t) = (a1 cos(w1 t) + c1, a2 sin(w2 t) + c2)."""

    a1: float = 0.8
    w1: float = 0.025
    c1: float = 0.08
    a2: float = 0.8
    w2: float = 0.05
    c2: float = 0.5

    class Config:
        allow_mutation = False


class TargetPath(BaseModel):
    """
    Trajectory of the moving extremum together with a bound on its speed.

    ``nu_bound`` is filled with the closed-form bound for analytic kinds and a
    finite-difference estimate (with a 10% margin) for tabulated samples when not given.
    """

    kind: PathKind
    point: Optional[Vec2] = None
    line_sine: LineSineParams = Field(default_factory=LineSineParams)
    figure_eight: FigureEightParams = Field(default_factory=FigureEightParams)
    times: List[float] = Field(default_factory=list)
    points: List[Vec2] = Field(default_factory=list)
    nu_bound: Optional[float] = Field(default=None, ge=0.0, description="Bound on |d gamma/dt| (m/s)")

    class Config:
        allow_mutation = False
        use_enum_values = False

    @validator("times")
    def validate_times(cls, v):
        for a, b in zip(v, v[1:]):
            if not b > a:
                raise ValueError("Tabulated sample times must be strictly increasing")
        return v

    @root_validator(skip_on_failure=True)
    def fill_kind_data(cls, values):
        kind = values.get("kind")
        if kind == PathKind.CONSTANT and values.get("point") is None:
            raise ValueError("Constant path needs a point")
        if kind == PathKind.TABULATED:
            times, points = values.get("times", []), values.get("points", [])
            if len(times) < 2 or len(times) != len(points):
                raise ValueError("Tabulated path needs >= 2 samples with one point per time")
        if values.get("nu_bound") is None:
            values["nu_bound"] = _closed_form_speed_bound(kind, values)
        return values

    # Constructors

    @classmethod
    def constant(cls, x1: float, x2: float) -> "TargetPath":
        return cls(kind=PathKind.CONSTANT, point=Vec2(x1=x1, x2=x2))

    @classmethod
    def line_sine_path(cls, **params) -> "TargetPath":
        return cls(kind=PathKind.LINE_SINE, line_sine=LineSineParams(**params))

    @classmethod
    def figure_eight_path(cls, **params) -> "TargetPath":
        return cls(kind=PathKind.FIGURE_EIGHT, figure_eight=FigureEightParams(**params))

    @classmethod
    def tabulated(cls, samples: List[Tuple[float, Vec2]]) -> "TargetPath":
        return cls(
            kind=PathKind.TABULATED,
            times=[float(t) for t, _ in samples],
            points=[p for _, p in samples],
        )

    # Fast scalar evaluation, used inside integrators

    def position(self, t: float) -> Tuple[float, float]:
        """gamma(t) as a float pair."""
        kind = self.kind
        if kind == PathKind.CONSTANT:
            return self.point.x1, self.point.x2
        if kind == PathKind.LINE_SINE:
            p = self.line_sine
            return p.rate * t, p.amplitude * math.sin(p.frequency * t)
        if kind == PathKind.FIGURE_EIGHT:
            p = self.figure_eight
            return p.a1 * math.cos(p.w1 * t) + p.c1, p.a2 * math.sin(p.w2 * t) + p.c2
        i, w = self._bracket(t)
        a, b = self.points[i], self.points[i + 1]
        return a.x1 + w * (b.x1 - a.x1), a.x2 + w * (b.x2 - a.x2)

    def velocity(self, t: float) -> Tuple[float, float]:
        """d gamma / dt as a float pair (segment slope for tabulated paths)."""
        kind = self.kind
        if kind == PathKind.CONSTANT:
            return 0.0, 0.0
        if kind == PathKind.LINE_SINE:
            p = self.line_sine
            return p.rate, p.amplitude * p.frequency * math.cos(p.frequency * t)
        if kind == PathKind.FIGURE_EIGHT:
            p = self.figure_eight
            return -p.a1 * p.w1 * math.sin(p.w1 * t), p.a2 * p.w2 * math.cos(p.w2 * t)
        i, _ = self._bracket(t)
        a, b = self.points[i], self.points[i + 1]
        dt = self.times[i + 1] - self.times[i]
        return (b.x1 - a.x1) / dt, (b.x2 - a.x2) / dt

    def _bracket(self, t: float) -> Tuple[int, float]:
        times = self.times
        if t < times[0] or t > times[-1]:
            raise RangeError(f"t={t!r} outside tabulated range [{times[0]!r}, {times[-1]!r}]")
        i = bisect.bisect_right(times, t) - 1
        i = min(max(i, 0), len(times) - 2)
        return i, (t - times[i]) / (times[i + 1] - times[i])

    def speed_bound(self, t0: float, t_end: float) -> float:
        """Valid bound on |d gamma/dt| over [t0, t_end]."""
        if not t_end > t0:
            raise ParameterError(f"Speed bound window needs t_end > t0, got [{t0}, {t_end}]")
        if self.kind != PathKind.TABULATED:
            return float(self.nu_bound)
        best = 0.0
        for i in range(len(self.times) - 1):
            lo, hi = self.times[i], self.times[i + 1]
            if hi < t0 or lo > t_end:
                continue
            a, b = self.points[i], self.points[i + 1]
            best = max(best, math.hypot(b.x1 - a.x1, b.x2 - a.x2) / (hi - lo))
        return TABULATED_SPEED_MARGIN * best


def _closed_form_speed_bound(kind: PathKind, values) -> float:
    """sup |gamma'| for analytic kinds; global estimate for tabulated samples."""
    if kind == PathKind.CONSTANT:
        return 0.0
    if kind == PathKind.LINE_SINE:
        p = values["line_sine"]
        return math.hypot(p.rate, p.amplitude * p.frequency)
    if kind == PathKind.FIGURE_EIGHT:
        # Attained when w2 = 2 w1, as in the default figure eight.
        p = values["figure_eight"]
        return math.hypot(p.a1 * p.w1, p.a2 * p.w2)
    times, points = values["times"], values["points"]
    slopes = [
        math.hypot(b.x1 - a.x1, b.x2 - a.x2) / (tb - ta)
        for ta, tb, a, b in zip(times, times[1:], points, points[1:])
    ]
    return TABULATED_SPEED_MARGIN * max(slopes)


def eval_target(path: TargetPath, t: float) -> Vec2:
    """
    Evaluate the target position.

    Args:
        path: Target path
        t: Time (>= 0)

    Returns:
        gamma(t)

    Raises:
        RangeError: t outside the samples of a tabulated path
    """
    x1, x2 = path.position(t)
    return Vec2(x1=x1, x2=x2)


def target_speed_bound(path: TargetPath, t0: float, t_end: float) -> float:
    """
    Bound nu on the target speed over a window.

    Closed form for analytic paths, max segment slope times 1.1 for tabulated ones.
    """
    nu = path.speed_bound(t0, t_end)
    logger.debug(f"Speed bound for {path.kind.value} on [{t0}, {t_end}]: {nu}")
    return nu
