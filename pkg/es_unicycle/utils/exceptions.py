"""
Exception hierarchy for es-unicycle.
"""

from typing import Optional


class EsUnicycleError(Exception):
    """Base class for all package errors."""


class ParameterError(EsUnicycleError, ValueError):
    """A parameter violates a structural requirement (k < 2, lambda >= rho, ...)."""


class RangeError(EsUnicycleError, ValueError):
    """A tabulated quantity was queried outside its sample range."""


class DomainError(EsUnicycleError, ValueError):
    """A function was evaluated outside the domain where it is defined."""


class GuardBandError(DomainError):
    """A point lies inside the guard band around a zero or singular point."""

    def __init__(self, message: str, z: Optional[float] = None):
        super().__init__(message)
        self.z = z


class QuadratureError(EsUnicycleError, ArithmeticError):
    """Numerical quadrature did not reach the requested tolerance."""


class DivergenceError(EsUnicycleError, ArithmeticError):
    """The state norm left the admissible bound; the partial trajectory is attached."""

    def __init__(self, message: str, time: float, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class DegenerateStudyError(EsUnicycleError):
    """Every point of a study was excluded, so nothing can be fitted."""


class ScenarioNotFoundError(EsUnicycleError, KeyError):
    """The requested scenario is neither built in nor in the loaded config file."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown scenario"
