"""
Schema definitions for es-unicycle data structures.
Uses Pydantic for validation and serialization.
"""

import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, validator


class Vec2(BaseModel):
    """Planar vector (meters)."""

    x1: float = Field(..., description="First coordinate")
    x2: float = Field(..., description="Second coordinate")

    class Config:
        allow_mutation = False

    @validator("x1", "x2")
    def validate_finite(cls, v):
        """Reject NaN and infinite components."""
        if not math.isfinite(v):
            raise ValueError("Vec2 components must be finite")
        return float(v)

    @classmethod
    def of(cls, x1: float, x2: float) -> "Vec2":
        return cls(x1=x1, x2=x2)

    @classmethod
    def from_array(cls, arr) -> "Vec2":
        return cls(x1=float(arr[0]), x2=float(arr[1]))

    @classmethod
    def parse(cls, text: str) -> "Vec2":
        """Parse ``"a,b"`` as used by config files and CLI overrides."""
        parts = [p.strip() for p in text.strip().strip("()").split(",")]
        if len(parts) != 2:
            raise ValueError(f"Expected two comma-separated components, got {text!r}")
        return cls(x1=float(parts[0]), x2=float(parts[1]))

    def as_tuple(self) -> Tuple[float, float]:
        return (self.x1, self.x2)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2], dtype=float)

    def norm(self) -> float:
        return math.hypot(self.x1, self.x2)

    def __str__(self) -> str:
        return f"{self.x1!r},{self.x2!r}"


class Trajectory(BaseModel):
    """
    Time-stamped samples of a simulation.

    Arrays share the first dimension; ``x`` and ``gamma`` are (N, 2).
    ``theta`` and ``u`` are zero for averaged (non-oscillatory) flows.
    """

    t: np.ndarray
    x: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    J: np.ndarray
    err: np.ndarray
    kappa: float = Field(..., gt=0.0, description="Cost curvature used for J")
    averaged: bool = Field(default=False, description="True for Lie-bracket averaged flows")

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("t")
    def validate_times(cls, v):
        """Sample times must be strictly increasing."""
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("Trajectory needs at least one sample")
        if v.size > 1 and not np.all(np.diff(v) > 0.0):
            raise ValueError("Trajectory times must be strictly increasing")
        return v

    @validator("x", "gamma", "theta", "u", "J", "err")
    def validate_lengths(cls, v, values):
        v = np.asarray(v, dtype=float)
        if "t" in values and v.shape[0] != values["t"].shape[0]:
            raise ValueError("All trajectory arrays must have one entry per sample")
        return v

    def __len__(self) -> int:
        return int(self.t.shape[0])

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def window(self, t_lo: float, t_hi: Optional[float] = None) -> "Trajectory":
        """Samples with ``t_lo <= t <= t_hi``."""
        hi = self.t_end if t_hi is None else t_hi
        mask = (self.t >= t_lo) & (self.t <= hi)
        return self._subset(mask)

    def downsample(self, every: int) -> "Trajectory":
        """Keep every ``every``-th sample, always including the last one."""
        if every <= 1:
            return self
        idx = np.arange(0, len(self), every)
        if idx[-1] != len(self) - 1:
            idx = np.append(idx, len(self) - 1)
        return self._subset(idx)

    def _subset(self, idx) -> "Trajectory":
        return Trajectory(
            t=self.t[idx],
            x=self.x[idx],
            gamma=self.gamma[idx],
            theta=self.theta[idx],
            u=self.u[idx],
            J=self.J[idx],
            err=self.err[idx],
            kappa=self.kappa,
            averaged=self.averaged,
        )

    def cost_consistency_residual(self) -> float:
        """Max of |J - kappa * err^2| over the samples."""
        return float(np.max(np.abs(self.J - self.kappa * self.err ** 2)))


class Metrics(BaseModel):
    """Tracking metrics of one trajectory."""

    accumulated_sq_error: float = Field(..., ge=0.0, description="Trapezoid integral of err^2")
    control_effort: float = Field(..., ge=0.0, description="Trapezoid integral of |u|")
    final_error: float = Field(..., ge=0.0)
    max_error_tail: float = Field(..., ge=0.0, description="Max err over the last 25% of the window")
    mean_sq_error_tail: float = Field(..., ge=0.0, description="Mean err^2 over the last 25% of the window")
    max_abs_control: float = Field(..., ge=0.0)
    settle_time: Optional[float] = Field(default=None, description="First t after which err stays below threshold")
    settle_threshold: float = Field(..., ge=0.0)
    t0: float
    t_end: float

    def to_flat(self) -> Dict[str, Optional[float]]:
        return self.dict()


class Theorem3Report(BaseModel):
    """Thresholds of the quadratic-cost stability conditions and an admissibility verdict."""

    kappa: float
    lambda_: float = Field(..., alias="lambda")
    rho: float
    nu: float
    vartheta: float
    delta: float
    vartheta_min: float
    delta_max: float
    admissible: bool
    violations: List[str] = Field(default_factory=list)

    class Config:
        allow_population_by_field_name = True


class ProbeRun(BaseModel):
    """Outcome of a single probe simulation."""

    omega: float
    t0: float
    x0: Vec2
    contained: bool
    settled_after: Optional[float] = Field(default=None, description="Time after t0 from which the run stays in B_eps")
    max_distance: float = Field(..., description="Sup distance to the moving level set, inf on divergence")
    envelope_violation_fraction: Optional[float] = None


class StabilityProbeReport(BaseModel):
    """
    Empirical check of practical stability on finite grids.

    Verdicts describe the sampled runs only.
    """

    epsilon: float
    delta: float
    lambda_: float = Field(..., alias="lambda")
    level_set_radius: float
    omega_grid: List[float]
    t0_grid: List[float]
    omega0: Optional[float] = None
    t1: Optional[float] = None
    stable: bool
    attractive: bool
    bounded: bool
    theorem3: Optional[Theorem3Report] = None
    precondition_violations: List[str] = Field(default_factory=list)
    runs: List[ProbeRun] = Field(default_factory=list)
    note: str = "verdicts quantify over the sampled omega, t0 and initial-state grids only"

    class Config:
        allow_population_by_field_name = True


class OmegaStudyRow(BaseModel):
    k: int
    omega: float
    sup_distance: float


class VolterraPoint(BaseModel):
    omega: float
    r_norm: float
    excluded: bool = False


class VolterraStudyReport(BaseModel):
    points: List[VolterraPoint]
    fitted_slope: Optional[float] = None
    degenerate: bool = False


class StudyKind(str, Enum):
    """Empirical studies available from the CLI."""
    OMEGA = "omega"
    VOLTERRA = "volterra"
    PROBE = "probe"


class RunArtifacts(BaseModel):
    """Files written by one run; ``diverged`` marks partial artifacts."""

    trajectory_csv_path: str
    summary_path: str
    plotdata_paths: List[str] = Field(default_factory=list)
    diverged: bool = False
    divergence_time: Optional[float] = None


class CompareRow(BaseModel):
    law: str
    accumulated_sq_error: Optional[float] = None
    control_effort: Optional[float] = None
    final_error: Optional[float] = None
    max_error_tail: Optional[float] = None
    mean_sq_error_tail: Optional[float] = None
    failed: bool = False
    reason: str = ""


class CompareReport(BaseModel):
    """One row per law, sorted by accumulated squared error with failed rows last."""

    scenario: str
    rows: List[CompareRow]
    table_path: Optional[str] = None

    @property
    def any_failed(self) -> bool:
        return any(r.failed for r in self.rows)


class StudyArtifacts(BaseModel):
    kind: StudyKind
    summary_path: str
    table_path: str
