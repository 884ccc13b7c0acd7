"""
Empirical studies of the averaging estimates: exponential decay of the averaged flow,
convergence of the closed loop to the averaged system as omega grows, and the
omega^-1.5 scaling of the one-period Volterra remainder.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from sklearn.linear_model import LinearRegression

from es_unicycle.api.config import RunSettings
from es_unicycle.api.scenarios import Scenario
from es_unicycle.core.dynamics import AveragedSystem, ClosedLoopSystem, simulate_averaged, simulate_closed_loop
from es_unicycle.core.volterra import one_period_map
from es_unicycle.utils.exceptions import DegenerateStudyError, DivergenceError, ParameterError
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.parallel import parallel_map
from es_unicycle.utils.schema import OmegaStudyRow, Trajectory, VolterraPoint, VolterraStudyReport

logger = get_logger(__name__)

J_FLOOR = 1e-12
DECAY_RATE_TOLERANCE = 1e-3
AVERAGED_STEP = 0.01
MIN_VOLTERRA_POINTS = 4
MIN_VOLTERRA_SPAN = 8.0


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Ordinary least-squares slope of y against x."""
    x_arr = np.asarray(x, dtype=float).reshape(-1, 1)
    y_arr = np.asarray(y, dtype=float)
    if x_arr.shape[0] < 2:
        raise DegenerateStudyError("a slope needs at least two points")
    model = LinearRegression().fit(x_arr, y_arr)
    return float(model.coef_[0])


def fit_loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Slope of log y against log x."""
    return fit_slope(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)))


def decay_rate_check(avg_traj: Trajectory, kappa: float, vartheta: float) -> float:
    """
    Exponential decay rate of J along an averaged trajectory.

    Fits ln J(t) by least squares on the samples with J > 1e-12. For a fixed target
    the averaged flow gives exactly 4 kappa g, g being the descent gain; a fitted rate
    more than 0.1% away from that is logged as a warning.

    Args:
        avg_traj: Averaged trajectory towards a constant target
        kappa: Cost curvature
        vartheta: Descent gain the trajectory was simulated with

    Returns:
        Fitted rate (positive for decay, 0 for a frozen flow)

    Raises:
        DegenerateStudyError: fewer than two samples with J > 1e-12
    """
    keep = avg_traj.J > J_FLOOR
    if int(np.count_nonzero(keep)) < 2:
        raise DegenerateStudyError("J vanishes on the whole window; no decay rate to fit")
    rate = -fit_slope(avg_traj.t[keep], np.log(avg_traj.J[keep]))
    expected = 4.0 * kappa * vartheta
    if math.isclose(rate, expected, rel_tol=DECAY_RATE_TOLERANCE, abs_tol=1e-12):
        logger.debug(f"Fitted decay rate {rate:.9g} (4 kappa g = {expected:.9g})")
    else:
        logger.warning(f"Fitted decay rate {rate:.9g} departs from 4 kappa g = {expected:.9g}")
    return rate


# Omega convergence

def omega_distance(task: Tuple[Scenario, int, Optional[float]]) -> OmegaStudyRow:
    """Sup distance between the closed loop at omega = k Omega and the averaged flow."""
    scenario, k, duration = task
    config = scenario.config.updated(k=k)
    if duration is not None:
        config = config.updated(t_end=config.t0 + duration)
    law, cost, config = scenario.copy(update={"config": config}).build()
    try:
        closed = simulate_closed_loop(ClosedLoopSystem(law=law, cost=cost, config=config))
        averaged = simulate_averaged(
            AveragedSystem(law=law, cost=cost), config.x0, config.t0, config.t_end, AVERAGED_STEP
        )
    except DivergenceError as e:
        logger.warning(f"omega study run at k={k} diverged at t={e.time}")
        return OmegaStudyRow(k=k, omega=law.omega, sup_distance=math.inf)
    spline = CubicSpline(averaged.t, averaged.x, axis=0)
    reference = spline(closed.t)
    distance = np.hypot(closed.x[:, 0] - reference[:, 0], closed.x[:, 1] - reference[:, 1])
    return OmegaStudyRow(k=k, omega=law.omega, sup_distance=float(np.max(distance)))


def omega_convergence_study(
    scenario: Scenario,
    k_list: Sequence[int],
    duration: Optional[float] = None,
    settings: Optional[RunSettings] = None,
) -> List[OmegaStudyRow]:
    """
    sup_t |x_omega(t) - x_avg(t)| for each k, closed loop and averaged flow from the same x0.

    Divergent runs are reported with an infinite distance.

    Raises:
        ParameterError: empty list or some k < 2
    """
    if not k_list:
        raise ParameterError("k list must be non-empty")
    if any(int(k) != k or k < 2 for k in k_list):
        raise ParameterError(f"every k must be an integer >= 2, got {list(k_list)}")
    settings = settings or RunSettings()
    tasks = [(scenario, int(k), duration) for k in k_list]
    rows = parallel_map(omega_distance, tasks, settings.workers, settings.show_progress, desc="omega study")
    for row in rows:
        logger.info(f"k={row.k} omega={row.omega:g}: sup distance {row.sup_distance:.6g}")
    return rows


def is_non_increasing(rows: Sequence[OmegaStudyRow]) -> bool:
    distances = [r.sup_distance for r in sorted(rows, key=lambda r: r.k)]
    return all(b <= a for a, b in zip(distances, distances[1:]))


# Volterra remainder scaling

def volterra_point(task: Tuple[Scenario, float]) -> VolterraPoint:
    """Remainder norm of the one-period map at one omega, Omega scaled to keep k."""
    scenario, omega = task
    k = scenario.config.k
    config = scenario.config.updated(Omega=omega / k)
    law, cost, config = scenario.copy(update={"config": config}).build()
    _, r_norm = one_period_map(ClosedLoopSystem(law=law, cost=cost, config=config), config.x0, config.t0)
    return VolterraPoint(omega=law.omega, r_norm=r_norm, excluded=r_norm == 0.0)


def volterra_scaling_study(
    scenario: Scenario,
    omega_list: Sequence[float],
    settings: Optional[RunSettings] = None,
) -> VolterraStudyReport:
    """
    Log-log slope of the one-period remainder against omega.

    Points with a remainder of exactly 0 are excluded; if fewer than two remain the
    report is marked degenerate and carries no slope.

    Raises:
        ParameterError: fewer than 4 omegas or a span below 8x
        GuardBandError: the scenario's x0 is near a singular point of the law
    """
    omegas = sorted(float(w) for w in omega_list)
    if len(omegas) < MIN_VOLTERRA_POINTS:
        raise ParameterError(f"need at least {MIN_VOLTERRA_POINTS} omegas, got {len(omegas)}")
    if not omegas[0] > 0.0 or omegas[-1] / omegas[0] < MIN_VOLTERRA_SPAN:
        raise ParameterError(f"omegas must be positive and span at least {MIN_VOLTERRA_SPAN:g}x")
    settings = settings or RunSettings()
    points = parallel_map(
        volterra_point, [(scenario, w) for w in omegas], settings.workers, settings.show_progress, desc="volterra"
    )
    used = [p for p in points if not p.excluded]
    if len(used) < 2:
        logger.warning(f"Volterra study on {scenario.name} is degenerate: {len(points) - len(used)} point(s) excluded")
        return VolterraStudyReport(points=points, fitted_slope=None, degenerate=True)
    slope = fit_loglog_slope([p.omega for p in used], [p.r_norm for p in used])
    logger.info(f"Volterra remainder slope on {scenario.name}: {slope:.4f}")
    return VolterraStudyReport(points=points, fitted_slope=slope, degenerate=False)
