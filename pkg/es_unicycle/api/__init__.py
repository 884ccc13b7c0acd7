"""
es-unicycle API Module

Run configuration and the scenario catalog.
"""

from es_unicycle.api.config import SimConfig, LawTuning, RunSettings
from es_unicycle.api.scenarios import Scenario, apply_overrides, get_scenario, list_scenarios, load_scenarios

__all__ = [
    "SimConfig",
    "LawTuning",
    "RunSettings",
    "Scenario",
    "apply_overrides",
    "get_scenario",
    "list_scenarios",
    "load_scenarios",
]
