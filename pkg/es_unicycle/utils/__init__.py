"""
es-unicycle Utils Module

Logging, exceptions, parallel helpers and schema definitions.
"""

from es_unicycle.utils.logger import get_logger, set_log_level, EsLogger
from es_unicycle.utils.exceptions import (
    EsUnicycleError,
    ParameterError,
    RangeError,
    DomainError,
    GuardBandError,
    QuadratureError,
    DivergenceError,
    DegenerateStudyError,
    ScenarioNotFoundError,
)
from es_unicycle.utils.schema import Vec2, Trajectory, Metrics, StudyKind

__all__ = [
    "get_logger",
    "set_log_level",
    "EsLogger",
    "EsUnicycleError",
    "ParameterError",
    "RangeError",
    "DomainError",
    "GuardBandError",
    "QuadratureError",
    "DivergenceError",
    "DegenerateStudyError",
    "ScenarioNotFoundError",
    "Vec2",
    "Trajectory",
    "Metrics",
    "StudyKind",
]
