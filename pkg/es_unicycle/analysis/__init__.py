"""
es-unicycle Analysis Module

Tracking metrics, the practical-stability probe and the averaging studies.
"""

from es_unicycle.analysis.metrics import compute_metrics
from es_unicycle.analysis.stability import practical_stability_probe, validate_theorem3
from es_unicycle.analysis.studies import decay_rate_check, omega_convergence_study, volterra_scaling_study

__all__ = [
    "compute_metrics",
    "practical_stability_probe",
    "validate_theorem3",
    "decay_rate_check",
    "omega_convergence_study",
    "volterra_scaling_study",
]
