"""
Stability conditions for the quadratic cost and an empirical practical-stability probe.

The conditions: for lambda in (0, rho), delta in (0, (sqrt(rho) - sqrt(lambda)) / sqrt(kappa))
and a gain above nu / (2 sqrt(kappa lambda)), trajectories starting delta-close to the
moving level set {J <= lambda} stay close to it for large enough omega.
"""

import math
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from es_unicycle.api.config import RunSettings
from es_unicycle.api.scenarios import Scenario, omega_to_k
from es_unicycle.core.dynamics import ClosedLoopSystem, simulate_closed_loop
from es_unicycle.utils.exceptions import DivergenceError, ParameterError
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.parallel import parallel_map
from es_unicycle.utils.schema import ProbeRun, StabilityProbeReport, Theorem3Report, Vec2

logger = get_logger(__name__)

PROBE_DIRECTIONS = 8
# Level used when the target is fixed and the minimal level is 0.
LAMBDA_FLOOR = 1e-2


def validate_theorem3(
    kappa: float,
    lambda_: float,
    rho: float,
    nu: float,
    vartheta: float,
    delta: float,
) -> Theorem3Report:
    """
    Thresholds of the quadratic-cost stability conditions and whether (vartheta, delta) meets them.

    Args:
        kappa: Cost curvature (> 0)
        lambda_: Level of the target set, in (0, rho)
        rho: Cost bound of the admissible region (> 0)
        nu: Target speed bound (>= 0)
        vartheta: Gain to check
        delta: Initial distance to check

    Returns:
        Report with vartheta_min = nu / (2 sqrt(kappa lambda)) and
        delta_max = (sqrt(rho) - sqrt(lambda)) / sqrt(kappa)

    Raises:
        ParameterError: kappa <= 0, rho <= 0, nu < 0, or lambda outside (0, rho)
    """
    if not kappa > 0.0:
        raise ParameterError(f"kappa must be positive, got {kappa!r}")
    if not rho > 0.0:
        raise ParameterError(f"rho must be positive, got {rho!r}")
    if not nu >= 0.0:
        raise ParameterError(f"nu must be non-negative, got {nu!r}")
    if not 0.0 < lambda_ < rho:
        raise ParameterError(f"lambda must lie in (0, rho={rho!r}), got {lambda_!r}")
    vartheta_min = nu / (2.0 * math.sqrt(kappa * lambda_))
    delta_max = (math.sqrt(rho) - math.sqrt(lambda_)) / math.sqrt(kappa)
    violations = []
    if not vartheta > vartheta_min:
        violations.append(f"vartheta={vartheta!r} <= vartheta_min={vartheta_min!r}")
    if not 0.0 < delta < delta_max:
        violations.append(f"delta={delta!r} outside (0, delta_max={delta_max!r})")
    return Theorem3Report(
        kappa=kappa,
        lambda_=lambda_,
        rho=rho,
        nu=nu,
        vartheta=vartheta,
        delta=delta,
        vartheta_min=vartheta_min,
        delta_max=delta_max,
        admissible=not violations,
        violations=violations,
    )


def minimal_lambda(kappa: float, nu: float, gain: float) -> float:
    """Smallest level the gain can hold: nu^2 / (4 kappa gain^2)."""
    return nu * nu / (4.0 * kappa * gain * gain)


def probe_lambda(kappa: float, nu: float, gain: float) -> float:
    """Twice the minimal level, or LAMBDA_FLOOR for a fixed target."""
    lam = minimal_lambda(kappa, nu, gain)
    return 2.0 * lam if lam > 0.0 else LAMBDA_FLOOR


def transient_envelope(
    kappa: float,
    beta: float,
    k: int,
    omega: float,
    err0: float,
    lambda_: float,
    t: Union[float, np.ndarray],
    t0: float = 0.0,
) -> Union[float, np.ndarray]:
    """exp(4 pi k kappa beta / omega) * err0 * exp(-2 kappa beta (t - t0)) + sqrt(lambda / kappa)."""
    prefactor = math.exp(4.0 * math.pi * k * kappa * beta / omega)
    return prefactor * err0 * np.exp(-2.0 * kappa * beta * (np.asarray(t) - t0)) + math.sqrt(lambda_ / kappa)


class ProbeTask(BaseModel):
    """One probe simulation; plain data so it can go to a worker process."""

    scenario: Scenario
    k: int
    t0: float
    duration: float
    x0: Vec2
    lambda_: float
    epsilon: float
    beta: Optional[float] = None


def run_probe(task: ProbeTask) -> ProbeRun:
    """Simulate one probe start and measure its distance to the moving level set."""
    scenario = task.scenario
    config = scenario.config.updated(k=task.k, x0=task.x0, t0=task.t0, t_end=task.t0 + task.duration)
    law, cost, config = scenario.copy(update={"config": config}).build()
    radius = math.sqrt(task.lambda_ / cost.kappa)
    try:
        traj = simulate_closed_loop(ClosedLoopSystem(law=law, cost=cost, config=config))
    except DivergenceError as e:
        logger.warning(f"Probe run from {task.x0} at omega={law.omega} diverged at t={e.time}")
        return ProbeRun(
            omega=law.omega, t0=task.t0, x0=task.x0, contained=False, settled_after=None, max_distance=math.inf
        )
    distance = np.maximum(0.0, traj.err - radius)
    outside = np.nonzero(distance > task.epsilon)[0]
    if outside.size == 0:
        settled_after: Optional[float] = 0.0
    elif outside[-1] == len(traj) - 1:
        settled_after = None
    else:
        settled_after = float(traj.t[outside[-1] + 1] - task.t0)
    violation = None
    if task.beta is not None:
        envelope = transient_envelope(
            cost.kappa, task.beta, law.k, law.omega, float(traj.err[0]), task.lambda_, traj.t, task.t0
        )
        violation = float(np.mean(traj.err > envelope))
    return ProbeRun(
        omega=law.omega,
        t0=task.t0,
        x0=task.x0,
        contained=outside.size == 0,
        settled_after=settled_after,
        max_distance=float(np.max(distance)),
        envelope_violation_fraction=violation,
    )


def probe_starts(scenario: Scenario, kappa: float, lambda_: float, delta: float, t0: float) -> List[Vec2]:
    """Eight states on the circle of radius sqrt(lambda / kappa) + delta around gamma(t0)."""
    g1, g2 = scenario.path.position(t0)
    r = math.sqrt(lambda_ / kappa) + delta
    angles = [2.0 * math.pi * m / PROBE_DIRECTIONS for m in range(PROBE_DIRECTIONS)]
    return [Vec2(x1=g1 + r * math.cos(a), x2=g2 + r * math.sin(a)) for a in angles]


def practical_stability_probe(
    scenario: Scenario,
    epsilon: float,
    delta: float,
    omega_grid: Sequence[float],
    t0_grid: Sequence[float],
    lambda_: Optional[float] = None,
    duration: Optional[float] = None,
    beta: Optional[float] = None,
    settings: Optional[RunSettings] = None,
) -> StabilityProbeReport:
    """
    Empirical practical-stability check on finite grids.

    For every (t0, omega) eight runs start at distance delta from the level set
    {J <= lambda} at t0 and are checked for staying within epsilon of the moving set.
    omega0 is the smallest grid omega from which on every run stays contained.

    Args:
        scenario: Scenario providing law, cost, Omega and the horizon
        epsilon: Containment radius (> 0)
        delta: Initial distance from the level set (> 0)
        omega_grid: Dither frequencies, each an integer multiple >= 2 of Omega
        t0_grid: Start times
        lambda_: Level; defaults to twice the minimal level for the scenario's gain
        duration: Length of each run; defaults to the scenario window
        beta: Decay constant for the informational transient envelope
        settings: Worker count and progress display

    Returns:
        Report; verdicts describe the sampled runs only

    Raises:
        ParameterError: empty grids, non-positive epsilon or delta, or omega not a multiple of Omega
    """
    if not omega_grid or not t0_grid:
        raise ParameterError("omega and t0 grids must be non-empty")
    if not (epsilon > 0.0 and delta > 0.0):
        raise ParameterError(f"epsilon and delta must be positive, got {epsilon!r}, {delta!r}")
    settings = settings or RunSettings()
    law, cost, config = scenario.build()
    duration = duration if duration is not None else config.t_end - config.t0
    nu = scenario.path.speed_bound(min(t0_grid), max(t0_grid) + duration)
    gain = law.descent_gain
    lam = lambda_ if lambda_ is not None else probe_lambda(cost.kappa, nu, gain)
    radius = math.sqrt(lam / cost.kappa)

    violations: List[str] = []
    theorem3: Optional[Theorem3Report] = None
    try:
        theorem3 = validate_theorem3(cost.kappa, lam, scenario.rho, nu, gain, delta)
        violations.extend(theorem3.violations)
    except ParameterError as e:
        violations.append(str(e))
    for v in violations:
        logger.warning(f"Stability precondition violated: {v}")

    omegas = sorted(set(float(w) for w in omega_grid))
    tasks = [
        ProbeTask(
            scenario=scenario,
            k=omega_to_k(w, config.Omega),
            t0=float(t0),
            duration=duration,
            x0=x0,
            lambda_=lam,
            epsilon=epsilon,
            beta=beta,
        )
        for w in omegas
        for t0 in t0_grid
        for x0 in probe_starts(scenario, cost.kappa, lam, delta, float(t0))
    ]
    logger.info(f"Probing {scenario.name}: {len(tasks)} runs, lambda={lam:.6g}, radius={radius:.6g}")
    runs = parallel_map(run_probe, tasks, settings.workers, settings.show_progress, desc="probe")

    passing = {w: all(r.contained for r in runs if math.isclose(r.omega, w)) for w in omegas}
    omega0 = None
    for w in reversed(omegas):
        if not passing[w]:
            break
        omega0 = w
    considered = [r for r in runs if omega0 is None or r.omega >= omega0 - 1e-12]
    attractive = all(r.settled_after is not None for r in considered)
    t1 = max(r.settled_after for r in considered) if attractive else None
    bounded = all(math.isfinite(r.max_distance) for r in considered)
    report = StabilityProbeReport(
        epsilon=epsilon,
        delta=delta,
        lambda_=lam,
        level_set_radius=radius,
        omega_grid=omegas,
        t0_grid=[float(t) for t in t0_grid],
        omega0=omega0,
        t1=t1,
        stable=omega0 is not None,
        attractive=attractive,
        bounded=bounded,
        theorem3=theorem3,
        precondition_violations=violations,
        runs=runs,
    )
    logger.info(f"Probe verdicts: stable={report.stable}, attractive={attractive}, bounded={bounded}, omega0={omega0}")
    return report
