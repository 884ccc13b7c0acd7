"""
Tracking metrics of simulated trajectories.
"""

from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from es_unicycle.core.target_path import TargetPath
from es_unicycle.utils.logger import get_logger
from es_unicycle.utils.schema import Metrics, Trajectory

logger = get_logger(__name__)

TAIL_FRACTION = 0.25
SETTLE_FACTOR = 2.0


def tracking_error(traj: Trajectory, path: TargetPath) -> np.ndarray:
    """|x(t) - gamma(t)| at every sample, with gamma taken from ``path``."""
    gamma = np.array([path.position(t) for t in traj.t.tolist()]).reshape(-1, 2)
    return np.hypot(traj.x[:, 0] - gamma[:, 0], traj.x[:, 1] - gamma[:, 1])


def _time_average(values: np.ndarray, t: np.ndarray) -> float:
    if t.shape[0] < 2:
        return float(values[0])
    return float(trapezoid(values, t) / (t[-1] - t[0]))


def settle_time(t: np.ndarray, err: np.ndarray, threshold: float) -> Optional[float]:
    """First sample time after which err stays <= threshold, or None if the last sample is above it."""
    above = np.nonzero(err > threshold)[0]
    if above.size == 0:
        return float(t[0])
    last = int(above[-1])
    if last == t.shape[0] - 1:
        return None
    return float(t[last + 1])


def compute_metrics(traj: Trajectory, path: TargetPath) -> Metrics:
    """
    Accumulated squared error, control effort and tail statistics of a trajectory.

    Integrals use the trapezoid rule on the trajectory grid. The tail is the last 25% of
    the window; the settle threshold is twice the tail's time-averaged error.

    Args:
        traj: Non-empty trajectory
        path: Target path the trajectory tracks

    Returns:
        Metrics
    """
    t = traj.t
    err = tracking_error(traj, path)
    if len(traj) > 1:
        accumulated = float(trapezoid(err ** 2, t))
        effort = float(trapezoid(np.abs(traj.u), t))
    else:
        accumulated = effort = 0.0
    t0, t_end = traj.t0, traj.t_end
    tail = t >= t_end - TAIL_FRACTION * (t_end - t0)
    tail_err = err[tail]
    threshold = SETTLE_FACTOR * _time_average(tail_err, t[tail])
    metrics = Metrics(
        accumulated_sq_error=accumulated,
        control_effort=effort,
        final_error=float(err[-1]),
        max_error_tail=float(np.max(tail_err)),
        mean_sq_error_tail=_time_average(tail_err ** 2, t[tail]),
        max_abs_control=float(np.max(np.abs(traj.u))),
        settle_time=settle_time(t, err, threshold),
        settle_threshold=threshold,
        t0=t0,
        t_end=t_end,
    )
    logger.debug(f"Metrics on [{t0}, {t_end}]: accumulated={accumulated:.6g}, effort={effort:.6g}")
    return metrics
