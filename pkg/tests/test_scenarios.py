"""
Tests for the scenario catalog, overrides and scenario files.
"""

import pickle

import pytest

from es_unicycle.api.config import RunSettings, SimConfig
from es_unicycle.api.scenarios import (
    apply_overrides,
    get_scenario,
    list_scenarios,
    load_scenarios,
    omega_to_k,
    resolve_scenario,
)
from es_unicycle.core.control_family import LawKind
from es_unicycle.core.target_path import PathKind
from es_unicycle.utils.exceptions import ParameterError, ScenarioNotFoundError
from es_unicycle.utils.schema import Vec2


class TestCatalog:
    """Test the built-in scenarios."""

    def test_names(self):
        assert [s.name for s in list_scenarios()] == ["sim-moving", "sim-fixed", "exp-fixed", "exp-eight"]

    def test_unknown(self):
        with pytest.raises(ScenarioNotFoundError) as exc:
            get_scenario("nope")
        assert isinstance(exc.value, KeyError)
        assert "nope" in str(exc.value)

    def test_sim_moving(self):
        s = get_scenario("sim-moving")
        assert s.config.omega == pytest.approx(50.0)
        assert s.config.x0 == Vec2(x1=-1.0, x2=1.0)
        assert s.path.kind == PathKind.LINE_SINE
        assert s.law == LawKind.CONT1

    def test_exp_fixed_tuning(self):
        law, cost, config = get_scenario("exp-fixed").build()
        assert law.kind == LawKind.CONT4
        assert law.alpha_used == pytest.approx(0.3249)
        assert law.amplitude_scale == 1.0
        assert cost.kappa == pytest.approx(4.0)
        assert config.omega == pytest.approx(3.0)

    def test_exp_fixed_other_law(self):
        law, cost, _ = get_scenario("exp-fixed").build(LawKind.CONT1)
        assert law.alpha_used == pytest.approx(2.25e-4)
        assert cost.kappa == pytest.approx(10.0)

    def test_untuned_law_uses_structural_alpha(self):
        law, cost, _ = get_scenario("exp-eight").build(LawKind.CONT1)
        assert law.alpha_used == pytest.approx(4.0 * (1.0 - 1.0 / 9.0))
        assert cost.kappa == 1.0

    def test_scenarios_pickle(self):
        s = get_scenario("exp-eight")
        assert pickle.loads(pickle.dumps(s)) == s


class TestOverrides:
    """Test key=value overrides."""

    def test_omega_sets_k(self):
        s = apply_overrides(get_scenario("sim-moving"), ["omega=60"])
        assert s.config.k == 12

    def test_omega_applied_after_Omega(self):
        s = apply_overrides(get_scenario("sim-moving"), ["omega=50", "Omega=10"])
        assert s.config.k == 5
        assert s.config.Omega == 10.0

    def test_omega_must_be_multiple(self):
        with pytest.raises(ParameterError):
            apply_overrides(get_scenario("sim-moving"), ["omega=52"])

    def test_config_fields(self):
        s = apply_overrides(get_scenario("sim-fixed"), ["t_end=3.5", "x0=2,-1", "theta0=0.5"])
        assert s.config.t_end == 3.5
        assert s.config.x0 == Vec2(x1=2.0, x2=-1.0)
        assert s.config.theta0 == 0.5

    def test_original_unchanged(self, sim_fixed):
        apply_overrides(sim_fixed, ["t_end=3.5"])
        assert sim_fixed.config.t_end == 20.0

    @pytest.mark.parametrize(
        "override",
        ["bogus=1", "t_end", "t_end=-1", "k=abc", "k=1", "law=cont9", "x0=1", "compute_metrics=maybe", "path=spiral"],
    )
    def test_invalid(self, override):
        with pytest.raises(ParameterError):
            apply_overrides(get_scenario("sim-fixed"), [override])

    def test_target_and_path(self):
        s = apply_overrides(get_scenario("sim-moving"), ["target=1,2"])
        assert s.path.kind == PathKind.CONSTANT
        assert s.path.point == Vec2(x1=1.0, x2=2.0)
        s = apply_overrides(s, ["path=figure_eight"])
        assert s.path.kind == PathKind.FIGURE_EIGHT

    def test_law_is_case_insensitive(self):
        assert apply_overrides(get_scenario("sim-fixed"), ["law=CONT3"]).law == LawKind.CONT3

    def test_tuning_keeps_other_fields(self):
        s = apply_overrides(get_scenario("exp-fixed"), ["alpha=0.1"])
        assert s.tuning_for().alpha == pytest.approx(0.1)
        assert s.kappa_for() == pytest.approx(4.0)

    def test_tuning_follows_overridden_law(self):
        s = apply_overrides(get_scenario("sim-fixed"), ["law=cont4", "tuned_kappa=7", "amplitude_scale=0.5"])
        law, cost, _ = s.build()
        assert cost.kappa == 7.0
        assert law.amplitude_scale == 0.5
        assert s.tuning_for(LawKind.CONT2).kappa is None

    def test_custom_law(self):
        s = apply_overrides(get_scenario("sim-fixed"), ["law=custom", "custom.f1=tanh", "custom.c0=0.5"])
        law, _, _ = s.build()
        assert law.kind == LawKind.CUSTOM
        assert law.pair.name == "custom:tanh"

    def test_compute_metrics_flag(self):
        assert not apply_overrides(get_scenario("sim-fixed"), ["compute_metrics=off"]).compute_metrics

    def test_omega_to_k(self):
        assert omega_to_k(50.0, 5.0) == 10
        with pytest.raises(ParameterError):
            omega_to_k(5.0, 5.0)


class TestScenarioFiles:
    """Test INI scenario files."""

    def test_load(self, scenario_file):
        scenarios = load_scenarios(scenario_file)
        assert list(scenarios) == ["short-fixed", "short-fixed-far"]
        short = scenarios["short-fixed"]
        assert short.name == "short-fixed"
        assert short.law == LawKind.CONT1
        assert short.config.t_end == 1.0
        assert short.path.kind == PathKind.CONSTANT

    def test_section_based_on_earlier_section(self, scenario_file):
        far = load_scenarios(scenario_file)["short-fixed-far"]
        assert far.config.x0 == Vec2(x1=2.0, x2=0.0)
        assert far.config.steps_per_fast_period == 20
        assert far.law == LawKind.CONT1
        assert far.description == "Start further out"

    def test_unknown_base(self, temp_dir):
        path = temp_dir / "bad.ini"
        path.write_text("[x]\nbase = nowhere\n", encoding="utf-8")
        with pytest.raises(ScenarioNotFoundError):
            load_scenarios(path)

    def test_missing_file(self, temp_dir):
        with pytest.raises(ParameterError):
            load_scenarios(temp_dir / "missing.ini")

    def test_resolve_prefers_file(self, scenario_file):
        assert resolve_scenario("short-fixed", scenario_file).config.t_end == 1.0
        assert resolve_scenario("sim-fixed", scenario_file).config.t_end == 20.0


class TestConfig:
    """Test simulation and run settings."""

    def test_window_must_be_positive(self):
        with pytest.raises(ValueError):
            SimConfig(x0=Vec2.of(0.0, 0.0), t0=2.0, t_end=1.0, Omega=1.0, k=2)

    def test_step(self, short_config):
        assert short_config.fast_period == pytest.approx(2.0 * 3.141592653589793 / 50.0)
        assert short_config.step == pytest.approx(short_config.fast_period / 20)

    def test_output_dir_from_environment(self, monkeypatch, temp_dir):
        monkeypatch.setenv("ES_UNICYCLE_OUT", str(temp_dir))
        assert RunSettings().output_dir == str(temp_dir)

    def test_log_level_validation(self):
        assert RunSettings(log_level="debug").log_level == "DEBUG"
        with pytest.raises(ValueError):
            RunSettings(log_level="chatty")

    def test_parallel_preset(self):
        settings = RunSettings.parallel(workers=3)
        assert settings.workers == 3
        assert settings.show_progress
