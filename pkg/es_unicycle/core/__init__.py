"""
es-unicycle Core Module

Target paths, costs, the control-law family, the closed-loop and averaged
dynamics, the one-period Volterra map, artifacts and the scenario runner.
"""

from es_unicycle.core.target_path import TargetPath, PathKind, eval_target, target_speed_bound
from es_unicycle.core.cost import CostFunction, LevelSetFamily, eval_cost, cost_gradient
from es_unicycle.core.control_family import ControlLaw, FPair, LawKind, eval_control, phi_field
from es_unicycle.core.integrator import rk4_integrate
from es_unicycle.core.dynamics import (
    AveragedSystem,
    ClosedLoopSystem,
    averaged_field_numeric,
    simulate_averaged,
    simulate_closed_loop,
)
from es_unicycle.core.volterra import one_period_map
from es_unicycle.core.artifact_store import ArtifactStore
from es_unicycle.core.scenario_runner import ScenarioRunner

__all__ = [
    "TargetPath",
    "PathKind",
    "eval_target",
    "target_speed_bound",
    "CostFunction",
    "LevelSetFamily",
    "eval_cost",
    "cost_gradient",
    "ControlLaw",
    "FPair",
    "LawKind",
    "eval_control",
    "phi_field",
    "rk4_integrate",
    "AveragedSystem",
    "ClosedLoopSystem",
    "averaged_field_numeric",
    "simulate_averaged",
    "simulate_closed_loop",
    "one_period_map",
    "ArtifactStore",
    "ScenarioRunner",
]
