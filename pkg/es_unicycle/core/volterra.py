"""
One-period solution map of the closed loop and its truncated Volterra expansion.

In error coordinates xi = x - gamma(t) the closed loop reads
xi' = sum_j g_j(xi) w_j(t) - gamma'(t) with w_j = sqrt(omega) * (dither x heading) products.
Over one common period T = 2 pi k / omega the expansion up to second order is

    xi(t0 + T) ~ xi0 - (gamma(t0 + T) - gamma(t0)) + sum_j g_j W_j(T)
                 + sum_{j,k} Dg_j g_k int W_k w_j

with every field frozen at (xi0, t0). The remainder is expected to shrink like omega^-1.5.
"""

import math
from typing import Tuple

import numpy as np
from scipy import integrate

from es_unicycle.core.dynamics import ClosedLoopSystem, frozen_fields
from es_unicycle.core.integrator import cumulative_simpson_even, rk4_integrate
from es_unicycle.utils.exceptions import DivergenceError
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Vec2

logger = get_logger(__name__)

REFINEMENT = 10
MIN_QUADRATURE_INTERVALS = 4096


def common_period(sys: ClosedLoopSystem) -> float:
    """T = 2 pi k / omega = 2 pi / Omega."""
    return 2.0 * math.pi * sys.law.k / sys.law.omega


def reference_steps(sys: ClosedLoopSystem) -> int:
    """RK4 steps per common period for the exact map, 10x finer than production."""
    return sys.law.k * sys.config.steps_per_fast_period * REFINEMENT


def dither_integrals(sys: ClosedLoopSystem, t0: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    First and second order input integrals over [t0, t0 + T].

    Returns:
        (W, B): W[j] = int w_j, B[k, j] = int W_k(tau) w_j(tau) dtau with W_k the running
        integral from t0.
    """
    T = common_period(sys)
    intervals = max(MIN_QUADRATURE_INTERVALS, 4 * math.ceil(reference_steps(sys) / 4))
    t = np.linspace(t0, t0 + T, intervals + 1)
    h = T / intervals
    omega = sys.law.omega
    wt = omega * t
    th = sys.config.theta0 + sys.config.Omega * (t - sys.config.t0)
    c, s = np.cos(wt), np.sin(wt)
    ch, sh = np.cos(th), np.sin(th)
    w = math.sqrt(omega) * np.stack([c * ch, s * ch, c * sh, s * sh])
    W = np.stack([cumulative_simpson_even(w[j], h) for j in range(4)])
    w_even = w[:, ::2]
    B = np.empty((4, 4))
    for k in range(4):
        for j in range(4):
            B[k, j] = integrate.simpson(W[k] * w_even[j], dx=2.0 * h)
    return W[:, -1], B


def truncated_map(sys: ClosedLoopSystem, x0: Vec2, t0: float) -> Vec2:
    """Second-order Volterra prediction of x(t0 + T) from (x0, t0)."""
    T = common_period(sys)
    fields, jacobians = frozen_fields(sys.law, sys.cost, x0, t0)
    W, B = dither_integrals(sys, t0)
    first = sum(fields[j] * W[j] for j in range(4))
    second = np.zeros(2)
    for j in range(4):
        for k in range(4):
            second += (jacobians[j] @ fields[k]) * B[k, j]
    gamma_start = np.array(sys.cost.path.position(t0))
    gamma_end = np.array(sys.cost.path.position(t0 + T))
    xi0 = x0.as_array() - gamma_start
    xi_trunc = xi0 - (gamma_end - gamma_start) + first + second
    return Vec2.from_array(xi_trunc + gamma_end)


def exact_map(sys: ClosedLoopSystem, x0: Vec2, t0: float) -> Vec2:
    """
    High-resolution RK4 endpoint x(t0 + T).

    Raises:
        DivergenceError: |x| exceeded 1e6 within the period
    """
    n = reference_steps(sys)
    times, states, t_div = rk4_integrate(sys.make_rhs(), t0, x0.as_tuple(), common_period(sys) / n, n)
    if t_div is not None:
        raise DivergenceError(f"one-period map diverged at t={t_div!r}", time=t_div)
    return Vec2.from_array(states[-1])


def one_period_map(sys: ClosedLoopSystem, x0: Vec2, t0: float) -> Tuple[Vec2, float]:
    """
    Exact one-period endpoint and the norm of its gap to the truncated expansion.

    Args:
        sys: Closed loop (its config supplies steps_per_fast_period and the heading phase)
        x0: State at t0
        t0: Start of the period

    Returns:
        (x(t0 + T), |exact - truncated|)

    Raises:
        GuardBandError: J(x0, t0) near a singular point of the law
    """
    truncated = truncated_map(sys, x0, t0)
    exact = exact_map(sys, x0, t0)
    r_norm = math.hypot(exact.x1 - truncated.x1, exact.x2 - truncated.x2)
    logger.debug(f"one-period map at omega={sys.law.omega}: r={r_norm:.3e}")
    return exact, r_norm
