"""
Closed-loop and averaged unicycle dynamics.

The closed loop is x' = u (cos theta, sin theta) with theta(t) = theta0 + Omega (t - t0)
and u from the extremum seeking law. The averaged system is x' = -g grad J + Phi.
"""

import math
from functools import lru_cache
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, root_validator
from scipy import integrate

from es_unicycle.api.config import SimConfig
from es_unicycle.core.control_family import FD_STEP, GUARD_BAND, ControlLaw
from es_unicycle.core.cost import CostFunction
from es_unicycle.core.integrator import Rhs, cumulative_simpson_even, rk4_integrate, steps_for_window
from es_unicycle.utils.exceptions import DivergenceError, DomainError, GuardBandError, ParameterError, QuadratureError
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Trajectory, Vec2

logger = get_logger(__name__)

# Simpson intervals per unit of k over the common period 2 pi k.
DITHER_INTERVALS_PER_K = 8192
DITHER_TOLERANCE = 1e-6


class ClosedLoopSystem(BaseModel):
    """Unicycle driven by an extremum seeking law on a time-varying cost."""

    law: ControlLaw
    cost: CostFunction
    config: SimConfig

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True

    @root_validator(skip_on_failure=True)
    def check_frequencies(cls, values):
        """Law and configuration must agree on k and Omega."""
        law, config = values["law"], values["config"]
        if law.k != config.k or not math.isclose(law.Omega, config.Omega, rel_tol=1e-12):
            raise ValueError(
                f"law (k={law.k}, Omega={law.Omega}) does not match config (k={config.k}, Omega={config.Omega})"
            )
        return values

    def theta(self, t: float) -> float:
        return self.config.theta0 + self.config.Omega * (t - self.config.t0)

    def make_rhs(self) -> Rhs:
        """Scalar right-hand side for the integrator, with all parameters bound as locals."""
        position = self.cost.path.position
        kappa = self.cost.kappa
        F1, F2 = self.law.pair.F1, self.law.pair.F2
        amplitude = self.law.amplitude
        omega = self.law.omega
        Omega = self.config.Omega
        theta0 = self.config.theta0
        t_ref = self.config.t0
        cos, sin = math.cos, math.sin

        def rhs(t: float, x1: float, x2: float) -> Tuple[float, float]:
            g1, g2 = position(t)
            d1 = x1 - g1
            d2 = x2 - g2
            J = kappa * (d1 * d1 + d2 * d2)
            wt = omega * t
            u = amplitude * (F1(J) * cos(wt) + F2(J) * sin(wt))
            th = theta0 + Omega * (t - t_ref)
            return u * cos(th), u * sin(th)

        return rhs

    def vector_field(self, t: float, x: Vec2) -> Vec2:
        v1, v2 = self.make_rhs()(t, x.x1, x.x2)
        return Vec2(x1=v1, x2=v2)


class AveragedSystem(BaseModel):
    """Lie bracket averaged system x' = -g grad J + Phi."""

    law: ControlLaw
    cost: CostFunction

    class Config:
        allow_mutation = False
        arbitrary_types_allowed = True

    def make_rhs(self) -> Rhs:
        gradient = self.cost.gradient
        value = self.cost.value
        rotation = self.law.rotation_field
        g = self.law.descent_gain

        def rhs(t: float, x1: float, x2: float) -> Tuple[float, float]:
            grad = gradient(x1, x2, t)
            try:
                p1, p2 = rotation(value(x1, x2, t), grad)
            except GuardBandError as e:
                raise GuardBandError(f"Phi not evaluable at t={t!r}: {e}", z=e.z) from e
            except DomainError as e:
                raise DomainError(f"Phi not evaluable at t={t!r}: {e}") from e
            return -g * grad[0] + p1, -g * grad[1] + p2

        return rhs

    def vector_field(self, t: float, x: Vec2) -> Vec2:
        v1, v2 = self.make_rhs()(t, x.x1, x.x2)
        return Vec2(x1=v1, x2=v2)


def _assemble(
    times: np.ndarray,
    states: np.ndarray,
    cost: CostFunction,
    law: Optional[ControlLaw] = None,
    theta: Optional[Callable[[float], float]] = None,
) -> Trajectory:
    """Trajectory record with target, heading, control, cost and error per sample."""
    position = cost.path.position
    kappa = cost.kappa
    n = times.shape[0]
    gamma = np.empty((n, 2))
    J = np.empty(n)
    u = np.zeros(n)
    th = np.zeros(n)
    for i, t in enumerate(times.tolist()):
        g1, g2 = position(t)
        gamma[i, 0] = g1
        gamma[i, 1] = g2
        d1 = states[i, 0] - g1
        d2 = states[i, 1] - g2
        J[i] = kappa * (d1 * d1 + d2 * d2)
        if law is not None:
            u[i] = law.u(t, J[i])
            th[i] = theta(t)
    err = np.hypot(states[:, 0] - gamma[:, 0], states[:, 1] - gamma[:, 1])
    return Trajectory(
        t=times, x=states, gamma=gamma, theta=th, u=u, J=J, err=err, kappa=kappa, averaged=law is None
    )


def _finite_prefix(times: np.ndarray, states: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    keep = np.all(np.isfinite(states), axis=1)
    stop = int(np.argmin(keep)) if not keep.all() else keep.shape[0]
    return times[:stop], states[:stop]


def _partial_trajectory(times, states, cost, law=None, theta=None):
    times, states = _finite_prefix(times, states)
    if times.shape[0] == 0:
        return None
    try:
        return _assemble(times, states, cost, law, theta)
    except (DomainError, ValueError):
        return None


def simulate_closed_loop(sys: ClosedLoopSystem) -> Trajectory:
    """
    Fixed-step RK4 simulation of the closed loop from t0 to t_end.

    The step is the largest one not above (2 pi / omega) / steps_per_fast_period that
    divides the window evenly.

    Raises:
        DivergenceError: |x| exceeded 1e6; the partial trajectory is attached
    """
    config = sys.config
    n, h = steps_for_window(config.t0, config.t_end, config.step)
    logger.info(
        f"Simulating closed loop ({sys.law.pair.name}, k={config.k}, Omega={config.Omega}) "
        f"on [{config.t0}, {config.t_end}] with {n} steps"
    )
    times, states, t_div = rk4_integrate(sys.make_rhs(), config.t0, config.x0.as_tuple(), h, n)
    if t_div is not None:
        partial = _partial_trajectory(times, states, sys.cost, sys.law, sys.theta)
        logger.error(f"Closed loop diverged at t={t_div}")
        raise DivergenceError(f"state norm exceeded 1e6 at t={t_div!r}", time=t_div, trajectory=partial)
    return _assemble(times, states, sys.cost, sys.law, sys.theta)


def simulate_averaged(sys: AveragedSystem, x0: Vec2, t0: float, t_end: float, h: float) -> Trajectory:
    """
    RK4 trajectory of the averaged system; heading and control are recorded as 0.

    Raises:
        ParameterError: h <= 0 or t_end <= t0
        DomainError: Phi not evaluable (message names the failure time)
        DivergenceError: |x| exceeded 1e6
    """
    if not h > 0.0:
        raise ParameterError(f"step must be positive, got {h!r}")
    if not t_end > t0:
        raise ParameterError(f"t_end must be greater than t0, got t0={t0!r}, t_end={t_end!r}")
    n, h_eff = steps_for_window(t0, t_end, h)
    logger.debug(f"Simulating averaged system ({sys.law.pair.name}) with {n} steps of {h_eff:.3e}")
    times, states, t_div = rk4_integrate(sys.make_rhs(), t0, x0.as_tuple(), h_eff, n)
    if t_div is not None:
        partial = _partial_trajectory(times, states, sys.cost)
        raise DivergenceError(f"averaged state norm exceeded 1e6 at t={t_div!r}", time=t_div, trajectory=partial)
    return _assemble(times, states, sys.cost)


# Numeric averaged-field construction

def dither_inputs(s: np.ndarray, k: int, phase: float = 0.0) -> np.ndarray:
    """
    The four inputs of the unicycle construction in fast time s = omega t.

    Rows: cos s cos(s/k + phase), sin s cos(s/k + phase), cos s sin(s/k + phase),
    sin s sin(s/k + phase).
    """
    c, sn = np.cos(s), np.sin(s)
    ch, sh = np.cos(s / k + phase), np.sin(s / k + phase)
    return np.stack([c * ch, sn * ch, c * sh, sn * sh])


def _dither_coefficients_at(k: int, intervals: int) -> np.ndarray:
    period = 2.0 * math.pi * k
    s = np.linspace(0.0, period, intervals + 1)
    h = period / intervals
    v = dither_inputs(s, k)
    V = np.stack([cumulative_simpson_even(v[i], h) for i in range(4)])
    v_even = v[:, ::2]
    coeffs = np.zeros((4, 4))
    for i in range(4):
        for j in range(i + 1, 4):
            coeffs[i, j] = integrate.simpson(V[i] * v_even[j], dx=2.0 * h) / period
    return coeffs


@lru_cache(maxsize=32)
def _cached_dither_coefficients(k: int) -> Tuple[Tuple[float, ...], ...]:
    intervals = DITHER_INTERVALS_PER_K * k
    fine = _dither_coefficients_at(k, intervals)
    coarse = _dither_coefficients_at(k, intervals // 2)
    gap = float(np.max(np.abs(fine - coarse)))
    if gap > DITHER_TOLERANCE:
        raise QuadratureError(f"Dither coefficients for k={k} did not converge (gap {gap:.3e})")
    logger.debug(f"Dither coefficients for k={k} converged (gap {gap:.3e})")
    return tuple(tuple(row) for row in fine)


def dither_coefficients(k: int) -> np.ndarray:
    """
    (1/P) int_0^P int_0^s v_j(s) v_i(r) dr ds for i < j over the common period P = 2 pi k.

    Composite Simpson for the inner running integral and for the outer one.
    Only the strict upper triangle is filled.

    Raises:
        QuadratureError: the result changed by more than 1e-6 between resolutions
    """
    return np.array(_cached_dither_coefficients(int(k)))


def analytic_dither_coefficients(k: int) -> np.ndarray:
    """Closed form: 1/alpha for (1,2) and (3,4), -1/(k alpha) for (1,3) and (2,4), else 0."""
    alpha = 4.0 * (1.0 - 1.0 / (k * k))
    coeffs = np.zeros((4, 4))
    coeffs[0, 1] = coeffs[2, 3] = 1.0 / alpha
    coeffs[0, 2] = coeffs[1, 3] = -1.0 / (k * alpha)
    return coeffs


def check_singular_band(law: ControlLaw, J: float, guard: float = GUARD_BAND) -> None:
    """Reject cost values near (but not at) a point where F o J is not differentiable."""
    for s in law.pair.singular_points:
        if 0.0 < abs(J - s) < guard:
            raise GuardBandError(
                f"J={J!r} lies within {guard:g} of the singular point {s!r} of {law.pair.name}", z=J
            )


def frozen_fields(
    law: ControlLaw, cost: CostFunction, x: Vec2, t: float
) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    """
    Input vector fields f1..f4 at (x, t) and their Jacobians, amplitude without sqrt(omega).

    f1 = c (F1, 0), f2 = c (F2, 0), f3 = c (0, F1), f4 = c (0, F2) with c = amplitude / sqrt(omega).
    Jacobians by central differences of F o J.
    """
    J = cost.value(x.x1, x.x2, t)
    check_singular_band(law, J)
    c = law.amplitude / math.sqrt(law.omega)
    F1, F2 = law.pair.F1, law.pair.F2
    h = FD_STEP
    grad_a = np.empty(2)
    grad_b = np.empty(2)
    for s, (e1, e2) in enumerate(((h, 0.0), (0.0, h))):
        Jp = cost.value(x.x1 + e1, x.x2 + e2, t)
        Jm = cost.value(x.x1 - e1, x.x2 - e2, t)
        grad_a[s] = (F1(Jp) - F1(Jm)) / (2.0 * h)
        grad_b[s] = (F2(Jp) - F2(Jm)) / (2.0 * h)
    a, b = F1(J), F2(J)
    zero = np.zeros(2)
    fields = [c * np.array([a, 0.0]), c * np.array([b, 0.0]), c * np.array([0.0, a]), c * np.array([0.0, b])]
    jacobians = [
        c * np.array([grad_a, zero]),
        c * np.array([grad_b, zero]),
        c * np.array([zero, grad_a]),
        c * np.array([zero, grad_b]),
    ]
    return fields, jacobians


def lie_bracket(f_i: np.ndarray, Df_i: np.ndarray, f_j: np.ndarray, Df_j: np.ndarray) -> np.ndarray:
    """[f_i, f_j] = Df_j f_i - Df_i f_j."""
    return Df_j @ f_i - Df_i @ f_j


def averaged_field_numeric(law: ControlLaw, cost: CostFunction, x: Vec2, t: float) -> Vec2:
    """
    Averaged vector field assembled from Lie brackets of the four input fields.

    Sum over i < j of [f_i, f_j] times the dither coefficient (i, j). Agrees with
    -g grad J + Phi for every member of the family.

    Raises:
        GuardBandError: J(x, t) within the guard band of a singular point
        QuadratureError: dither coefficients did not converge
    """
    coeffs = dither_coefficients(law.k)
    fields, jacobians = frozen_fields(law, cost, x, t)
    total = np.zeros(2)
    for i in range(4):
        for j in range(i + 1, 4):
            total += coeffs[i, j] * lie_bracket(fields[i], jacobians[i], fields[j], jacobians[j])
    return Vec2.from_array(total)
