"""
es-unicycle - Extremum seeking control of a nonholonomic unicycle

Simulates a unicycle with constant angular velocity steered by a bounded,
measurement-only forward velocity towards the minimum of a moving quadratic
cost, together with its averaged system and the studies that check the
averaging estimates.
"""

from es_unicycle.utils.schema import Vec2, Trajectory, Metrics
from es_unicycle.core.target_path import TargetPath
from es_unicycle.core.cost import CostFunction
from es_unicycle.core.control_family import ControlLaw, LawKind, make_builtin_law, make_custom_law
from es_unicycle.api.config import SimConfig, RunSettings
from es_unicycle.api.scenarios import Scenario, get_scenario, list_scenarios
from es_unicycle.core.scenario_runner import ScenarioRunner

__version__ = "0.1.0"
__all__ = [
    "Vec2",
    "Trajectory",
    "Metrics",
    "TargetPath",
    "CostFunction",
    "ControlLaw",
    "LawKind",
    "make_builtin_law",
    "make_custom_law",
    "SimConfig",
    "RunSettings",
    "Scenario",
    "get_scenario",
    "list_scenarios",
    "ScenarioRunner",
]
