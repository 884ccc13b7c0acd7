"""
Configuration management for es-unicycle.
Handles simulation, law-tuning and run-level options.
"""

import math
import os
from typing import Any, Optional

from pydantic import BaseModel, Field, validator

from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Vec2

logger = get_logger(__name__)

OUTPUT_DIR_ENV = "ES_UNICYCLE_OUT"
DEFAULT_OUTPUT_DIR = "./es_unicycle_out"
PRODUCTION_STEPS_PER_FAST_PERIOD = 100


class SimConfig(BaseModel):
    """Initial condition, time window and angular velocities of one simulation."""

    x0: Vec2 = Field(..., description="Initial state")
    t0: float = Field(default=0.0, ge=0.0, description="Initial time")
    t_end: float = Field(..., description="Final time")
    Omega: float = Field(..., gt=0.0, description="Heading angular velocity (rad/s)")
    k: int = Field(..., ge=2, description="Frequency ratio omega / Omega")
    theta0: float = Field(default=0.0, description="Initial heading (rad)")
    steps_per_fast_period: int = Field(default=200, ge=1, description="RK4 steps per dither period")

    class Config:
        allow_mutation = False

    @validator("t_end")
    def validate_window(cls, v, values):
        """t_end must exceed t0."""
        if "t0" in values and not v > values["t0"]:
            raise ValueError(f"t_end must be greater than t0, got t0={values['t0']}, t_end={v}")
        return v

    @validator("steps_per_fast_period")
    def warn_coarse_steps(cls, v):
        if v < PRODUCTION_STEPS_PER_FAST_PERIOD:
            logger.debug(f"steps_per_fast_period={v} is below the production minimum")
        return v

    @property
    def omega(self) -> float:
        return self.k * self.Omega

    @property
    def fast_period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def step(self) -> float:
        """Nominal RK4 step (2 pi / omega) / steps_per_fast_period."""
        return self.fast_period / self.steps_per_fast_period

    def updated(self, **changes: Any) -> "SimConfig":
        """Validated copy with some fields replaced."""
        data = self.dict()
        data.update(changes)
        return SimConfig(**data)


class LawTuning(BaseModel):
    """Experimental tuning of one law: alpha, kappa and amplitude scale overrides."""

    alpha: Optional[float] = Field(default=None, gt=0.0)
    kappa: Optional[float] = Field(default=None, gt=0.0)
    amplitude_scale: Optional[float] = Field(default=None, gt=0.0)

    class Config:
        allow_mutation = False


class RunSettings(BaseModel):
    """Options that affect how runs are executed and stored, not what is simulated."""

    output_dir: str = Field(
        default_factory=lambda: os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR),
        description="Directory for artifacts",
    )
    csv_max_rows: int = Field(default=100_000, ge=2, description="Row budget of trajectory CSVs")
    workers: int = Field(default=1, ge=1, description="Worker processes for studies")
    show_progress: bool = Field(default=False, description="Show tqdm progress bars")
    log_level: str = Field(default="WARNING", description="Logging level")

    class Config:
        validate_assignment = True

    @validator("log_level")
    def validate_log_level(cls, v):
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v = v.upper()
        if v not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return v

    @classmethod
    def parallel(cls, workers: Optional[int] = None) -> "RunSettings":
        """Settings that fan studies out over all cores."""
        return cls(workers=workers or max(1, os.cpu_count() or 1), show_progress=True)
