"""
Pytest configuration and fixtures for es-unicycle tests.
"""

import shutil
import tempfile
from pathlib import Path

import numpy as np
import pytest

from es_unicycle.api.config import RunSettings, SimConfig
from es_unicycle.api.scenarios import get_scenario
from es_unicycle.core.control_family import LawKind, make_builtin_law
from es_unicycle.core.cost import CostFunction
from es_unicycle.core.dynamics import ClosedLoopSystem
from es_unicycle.core.scenario_runner import ScenarioRunner
from es_unicycle.core.target_path import TargetPath
from es_unicycle.utils.schema import Trajectory, Vec2

# Overrides that keep closed-loop runs short in tests
FAST_OVERRIDES = ["t_end=1", "steps_per_fast_period=20"]


@pytest.fixture
def fast():
    """Overrides for a one-second run with a coarse step."""
    return list(FAST_OVERRIDES)


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    temp_path = tempfile.mkdtemp()
    yield Path(temp_path)
    shutil.rmtree(temp_path)


@pytest.fixture
def fixed_path():
    """Target fixed at the origin."""
    return TargetPath.constant(0.0, 0.0)


@pytest.fixture
def moving_path():
    """Default line-with-sine target."""
    return TargetPath.line_sine_path()


@pytest.fixture
def fixed_cost(fixed_path):
    return CostFunction(kappa=1.0, path=fixed_path)


@pytest.fixture
def moving_cost(moving_path):
    return CostFunction(kappa=1.0, path=moving_path)


@pytest.fixture
def short_config():
    """One second at Omega=5, k=10 with a coarse step."""
    return SimConfig(x0=Vec2(x1=1.0, x2=0.0), t0=0.0, t_end=1.0, Omega=5.0, k=10, steps_per_fast_period=20)


@pytest.fixture
def cont1_law():
    return make_builtin_law(LawKind.CONT1, vartheta=1.0, k=10, Omega=5.0)


@pytest.fixture
def cont2_law():
    return make_builtin_law(LawKind.CONT2, vartheta=1.0, k=10, Omega=5.0)


@pytest.fixture
def closed_loop(cont2_law, fixed_cost, short_config):
    return ClosedLoopSystem(law=cont2_law, cost=fixed_cost, config=short_config)


@pytest.fixture
def sim_fixed():
    return get_scenario("sim-fixed")


@pytest.fixture
def run_settings(temp_dir):
    """Serial settings writing into a temporary directory."""
    return RunSettings(output_dir=str(temp_dir), csv_max_rows=1000)


@pytest.fixture
def runner(run_settings):
    return ScenarioRunner(settings=run_settings)


@pytest.fixture
def constant_error_trajectory():
    """
    Synthetic trajectory at distance 1 from a target at the origin with |u| = 2.

    401 samples on [0, 4].
    """
    t = np.linspace(0.0, 4.0, 401)
    n = t.shape[0]
    x = np.column_stack([np.ones(n), np.zeros(n)])
    return Trajectory(
        t=t,
        x=x,
        gamma=np.zeros((n, 2)),
        theta=np.zeros(n),
        u=np.full(n, -2.0),
        J=np.ones(n),
        err=np.ones(n),
        kappa=1.0,
    )


@pytest.fixture
def scenario_file(temp_dir):
    """INI scenario file with two sections, the second based on the first."""
    path = temp_dir / "scenarios.ini"
    path.write_text(
        "[short-fixed]\n"
        "base = sim-fixed\n"
        "t_end = 1\n"
        "steps_per_fast_period = 20\n"
        "law = cont1\n"
        "\n"
        "[short-fixed-far]\n"
        "base = short-fixed\n"
        "x0 = 2,0\n"
        "description = Start further out\n",
        encoding="utf-8",
    )
    return path
