"""
Tests for the closed loop, the averaged system, the Lie-bracket construction
and the one-period Volterra map.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

from es_unicycle.analysis.studies import decay_rate_check
from es_unicycle.api.config import SimConfig
from es_unicycle.core.control_family import LawKind, make_builtin_law, make_custom_law
from es_unicycle.core.cost import CostFunction
from es_unicycle.core.dynamics import (
    AveragedSystem,
    ClosedLoopSystem,
    analytic_dither_coefficients,
    averaged_field_numeric,
    dither_coefficients,
    simulate_averaged,
    simulate_closed_loop,
)
from es_unicycle.core.target_path import TargetPath
from es_unicycle.core.volterra import common_period, dither_integrals, one_period_map, truncated_map
from es_unicycle.utils.exceptions import DivergenceError, DomainError, GuardBandError, ParameterError
from es_unicycle.utils.schema import Vec2

BUILTIN_KINDS = [LawKind.CONT1, LawKind.CONT2, LawKind.CONT3, LawKind.CONT4]

# (kappa, vartheta) pairs drawn once with a fixed seed
GAIN_PAIRS = [
    (round(float(kappa), 3), round(float(vartheta), 3))
    for kappa, vartheta in np.random.default_rng(20).uniform([0.25, 0.25], [2.0, 2.0], size=(10, 2))
]


class TestClosedLoop:
    """Test the oscillatory closed loop."""

    def test_frequency_mismatch_rejected(self, fixed_cost, short_config):
        law = make_builtin_law(LawKind.CONT1, vartheta=1.0, k=5, Omega=5.0)
        with pytest.raises(ValidationError):
            ClosedLoopSystem(law=law, cost=fixed_cost, config=short_config)

    def test_heading(self, closed_loop):
        assert closed_loop.theta(0.0) == 0.0
        assert closed_loop.theta(0.3) == pytest.approx(1.5)

    def test_vector_field(self, closed_loop):
        v = closed_loop.vector_field(0.0, Vec2.of(1.0, 0.0))
        assert v.x1 == pytest.approx(closed_loop.law.amplitude * math.sin(1.0))
        assert v.x2 == pytest.approx(0.0)

    def test_simulation_grid(self, closed_loop):
        traj = simulate_closed_loop(closed_loop)
        assert len(traj) == 161
        assert traj.t0 == 0.0
        assert traj.t_end == pytest.approx(1.0)
        assert traj.x[0] == pytest.approx([1.0, 0.0])
        assert not traj.averaged

    def test_recorded_signals(self, closed_loop):
        traj = simulate_closed_loop(closed_loop)
        assert traj.cost_consistency_residual() < 1e-12
        assert np.max(np.abs(traj.u)) <= closed_loop.law.input_bound * (1.0 + 1e-12)
        assert traj.theta == pytest.approx(5.0 * traj.t)
        assert traj.gamma == pytest.approx(np.zeros_like(traj.gamma))

    def test_reproducible(self, closed_loop):
        first = simulate_closed_loop(closed_loop)
        second = simulate_closed_loop(closed_loop)
        assert np.array_equal(first.x, second.x)

    def test_moving_target_gamma(self, cont1_law, moving_cost, short_config):
        traj = simulate_closed_loop(ClosedLoopSystem(law=cont1_law, cost=moving_cost, config=short_config))
        assert traj.gamma[-1] == pytest.approx([0.1, math.sin(0.1)])

    def test_divergence_carries_partial_trajectory(self, cont1_law, fixed_cost, short_config):
        config = short_config.updated(x0=Vec2.of(1000.0, 0.0))
        with pytest.raises(DivergenceError) as exc:
            simulate_closed_loop(ClosedLoopSystem(law=cont1_law, cost=fixed_cost, config=config))
        assert exc.value.time > 0.0
        assert exc.value.trajectory is not None
        assert exc.value.trajectory.t0 == 0.0


class TestAveragedSystem:
    """Test the Lie-bracket averaged flow."""

    @pytest.mark.parametrize("kind,kappa", [(LawKind.CONT1, 1.0), (LawKind.CONT2, 2.0), (LawKind.CONT4, 1.0)])
    def test_cost_decays_at_four_kappa_g(self, kind, kappa, fixed_path):
        law = make_builtin_law(kind, vartheta=1.0, k=3, Omega=1.0, amplitude_scale=1.0)
        cost = CostFunction(kappa=kappa, path=fixed_path)
        traj = simulate_averaged(AveragedSystem(law=law, cost=cost), Vec2.of(1.0, 0.5), 0.0, 3.0, 0.01)
        assert traj.averaged
        assert np.all(traj.u == 0.0)
        rate = decay_rate_check(traj, kappa, law.descent_gain)
        assert rate == pytest.approx(4.0 * kappa * law.descent_gain, rel=1e-4)

    @pytest.mark.parametrize("kappa,vartheta", GAIN_PAIRS)
    def test_bounded_law_rate_over_gains(self, kappa, vartheta, fixed_path):
        """Unscaled bounded law: J decays exactly like exp(-4 kappa vartheta t)."""
        law = make_builtin_law(LawKind.CONT2, vartheta=vartheta, k=10, Omega=5.0, amplitude_scale=1.0)
        cost = CostFunction(kappa=kappa, path=fixed_path)
        traj = simulate_averaged(AveragedSystem(law=law, cost=cost), Vec2.of(1.0, -0.5), 0.0, 1.0, 0.005)
        rate = decay_rate_check(traj, kappa, vartheta)
        assert rate == pytest.approx(4.0 * kappa * vartheta, rel=1e-3)

    def test_cont2_default_gain_is_half(self, cont2_law, fixed_cost):
        traj = simulate_averaged(AveragedSystem(law=cont2_law, cost=fixed_cost), Vec2.of(1.0, 0.0), 0.0, 2.0, 0.01)
        rate = decay_rate_check(traj, 1.0, cont2_law.descent_gain)
        assert rate == pytest.approx(2.0, rel=1e-4)

    def test_step_must_be_positive(self, cont1_law, fixed_cost):
        with pytest.raises(ParameterError):
            simulate_averaged(AveragedSystem(law=cont1_law, cost=fixed_cost), Vec2.of(1.0, 0.0), 0.0, 1.0, 0.0)

    def test_window_must_be_positive(self, cont1_law, fixed_cost):
        with pytest.raises(ParameterError):
            simulate_averaged(AveragedSystem(law=cont1_law, cost=fixed_cost), Vec2.of(1.0, 0.0), 1.0, 1.0, 0.01)

    def test_leaving_custom_domain_names_time(self, fixed_cost):
        law = make_custom_law("linear", z_ref=1.0, c0=-1.0, vartheta=1.0, k=10, Omega=5.0, z_lo=1e-3, z_hi=50.0)
        with pytest.raises(DomainError, match="t="):
            simulate_averaged(AveragedSystem(law=law, cost=fixed_cost), Vec2.of(1.0, 0.5), 0.0, 3.0, 0.01)


class TestLieBracketAveraging:
    """The bracket construction reproduces -g grad J + Phi."""

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_dither_coefficients_match_closed_form(self, k):
        numeric = dither_coefficients(k)
        assert numeric == pytest.approx(analytic_dither_coefficients(k), abs=1e-6)
        assert np.all(np.tril(numeric) == 0.0)

    @pytest.mark.parametrize("kind", [LawKind.CONT1, LawKind.CONT2, LawKind.CONT3, LawKind.CONT4])
    def test_numeric_field_matches_closed_form(self, kind, fixed_cost):
        law = make_builtin_law(kind, vartheta=1.0, k=3, Omega=1.0)
        x = Vec2.of(1.0, 0.5)
        numeric = averaged_field_numeric(law, fixed_cost, x, 0.0)
        closed = AveragedSystem(law=law, cost=fixed_cost).vector_field(0.0, x)
        assert numeric.as_array() == pytest.approx(closed.as_array(), abs=1e-5)

    @given(
        kind=st.sampled_from(BUILTIN_KINDS),
        k=st.sampled_from([2, 10]),
        radius=st.floats(min_value=0.2, max_value=1.5),
        angle=st.floats(min_value=0.0, max_value=2.0 * math.pi),
        t=st.floats(min_value=0.0, max_value=50.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_numeric_field_matches_closed_form_at_random_states(self, kind, k, radius, angle, t):
        law = make_builtin_law(kind, vartheta=1.0, k=k, Omega=1.0)
        cost = CostFunction(kappa=1.0, path=TargetPath.line_sine_path())
        g1, g2 = cost.path.position(t)
        x = Vec2.of(g1 + radius * math.cos(angle), g2 + radius * math.sin(angle))
        numeric = averaged_field_numeric(law, cost, x, t)
        closed = AveragedSystem(law=law, cost=cost).vector_field(t, x)
        assert numeric.as_array() == pytest.approx(closed.as_array(), abs=1e-5)

    def test_numeric_field_on_moving_target(self, cont1_law, moving_cost):
        x = Vec2.of(0.2, 0.9)
        numeric = averaged_field_numeric(cont1_law, moving_cost, x, 3.0)
        closed = AveragedSystem(law=cont1_law, cost=moving_cost).vector_field(3.0, x)
        assert numeric.as_array() == pytest.approx(closed.as_array(), abs=1e-5)

    def test_guard_band_near_singular_point(self, fixed_cost):
        law = make_builtin_law(LawKind.CONT3, vartheta=1.0, k=3, Omega=1.0)
        with pytest.raises(GuardBandError):
            averaged_field_numeric(law, fixed_cost, Vec2.of(0.02, 0.0), 0.0)

    def test_exact_singular_point_allowed(self, fixed_cost):
        law = make_builtin_law(LawKind.CONT4, vartheta=1.0, k=3, Omega=1.0)
        field = averaged_field_numeric(law, fixed_cost, Vec2.of(0.0, 0.0), 0.0)
        assert field.norm() == pytest.approx(0.0, abs=1e-12)


class TestVolterraMap:
    """Test the one-period map and its second-order expansion."""

    def test_common_period(self, closed_loop):
        assert common_period(closed_loop) == pytest.approx(2.0 * math.pi / 5.0)

    def test_first_order_integrals_vanish(self, closed_loop):
        W, B = dither_integrals(closed_loop, 0.0)
        assert W == pytest.approx(np.zeros(4), abs=1e-8)
        assert B + B.T == pytest.approx(np.zeros((4, 4)), abs=1e-8)

    def test_truncated_map_is_one_averaged_step(self, closed_loop):
        x0 = Vec2.of(1.0, 0.5)
        T = common_period(closed_loop)
        predicted = truncated_map(closed_loop, x0, 0.0)
        field = averaged_field_numeric(closed_loop.law, closed_loop.cost, x0, 0.0)
        assert predicted.as_array() - x0.as_array() == pytest.approx(T * field.as_array(), abs=1e-6)

    def test_remainder_independent_of_resolution(self, fixed_path):
        """Doubling the integration and quadrature resolution leaves the remainder unchanged."""
        cost = CostFunction(kappa=1.0, path=fixed_path)
        law = make_builtin_law(LawKind.CONT2, vartheta=1.0, k=10, Omega=40.0)
        remainders = []
        for spf in (200, 400):
            config = SimConfig(x0=Vec2.of(1.0, 0.0), t_end=1.0, Omega=40.0, k=10, steps_per_fast_period=spf)
            _, r = one_period_map(ClosedLoopSystem(law=law, cost=cost, config=config), config.x0, 0.0)
            remainders.append(r)
        assert remainders[0] > 0.0
        assert remainders[1] == pytest.approx(remainders[0], rel=1e-3)

    def test_remainder_shrinks_with_omega(self, fixed_path):
        cost = CostFunction(kappa=1.0, path=fixed_path)
        remainders = []
        for omega in (400.0, 1600.0):
            law = make_builtin_law(LawKind.CONT2, vartheta=1.0, k=10, Omega=omega / 10)
            config = SimConfig(x0=Vec2.of(1.0, 0.0), t_end=1.0, Omega=omega / 10, k=10)
            _, r = one_period_map(ClosedLoopSystem(law=law, cost=cost, config=config), config.x0, 0.0)
            remainders.append(r)
        assert 0.0 < remainders[1] < remainders[0]
