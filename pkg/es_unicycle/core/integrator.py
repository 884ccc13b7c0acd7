"""
Fixed-step classical Runge-Kutta integration for planar systems.

States are kept as float pairs inside the loop; the closed loop needs ~10^5-10^6 steps
and small numpy arrays would dominate the cost.
"""

import math
from typing import Callable, Optional, Tuple

import numpy as np

from es_unicycle.utils.exceptions import EsUnicycleError

Rhs = Callable[[float, float, float], Tuple[float, float]]

DIVERGENCE_NORM = 1e6


def steps_for_window(t0: float, t_end: float, nominal_step: float) -> Tuple[int, float]:
    """
    Number of uniform steps covering [t0, t_end] with a step not above ``nominal_step``.

    Returns:
        (n_steps, step)
    """
    duration = t_end - t0
    n = max(1, int(math.ceil(duration / nominal_step - 1e-9)))
    return n, duration / n


def rk4_step(rhs: Rhs, t: float, x1: float, x2: float, h: float) -> Tuple[float, float]:
    a1, a2 = rhs(t, x1, x2)
    hh = 0.5 * h
    b1, b2 = rhs(t + hh, x1 + hh * a1, x2 + hh * a2)
    c1, c2 = rhs(t + hh, x1 + hh * b1, x2 + hh * b2)
    d1, d2 = rhs(t + h, x1 + h * c1, x2 + h * c2)
    s = h / 6.0
    return x1 + s * (a1 + 2.0 * b1 + 2.0 * c1 + d1), x2 + s * (a2 + 2.0 * b2 + 2.0 * c2 + d2)


def rk4_integrate(
    rhs: Rhs,
    t0: float,
    x0: Tuple[float, float],
    h: float,
    n_steps: int,
    max_norm: float = DIVERGENCE_NORM,
) -> Tuple[np.ndarray, np.ndarray, Optional[float]]:
    """
    Integrate from t0 with ``n_steps`` uniform RK4 steps.

    Sample times are t0 + i h (no accumulated rounding), so identical inputs give
    bit-identical outputs.

    Returns:
        (times, states of shape (m, 2), divergence time or None). On divergence the
        arrays stop at the first sample whose norm exceeds ``max_norm``.
    """
    times = t0 + h * np.arange(n_steps + 1, dtype=float)
    states = np.empty((n_steps + 1, 2), dtype=float)
    x1, x2 = float(x0[0]), float(x0[1])
    states[0, 0] = x1
    states[0, 1] = x2
    limit = max_norm * max_norm
    step = rk4_step
    grid = times.tolist()
    for i in range(n_steps):
        try:
            x1, x2 = step(rhs, grid[i], x1, x2, h)
        except (OverflowError, ValueError) as e:
            # math functions reject inf states produced inside a step
            if isinstance(e, EsUnicycleError):
                raise
            return times[: i + 1], states[: i + 1], grid[i + 1]
        states[i + 1, 0] = x1
        states[i + 1, 1] = x2
        if not (x1 * x1 + x2 * x2 <= limit):
            return times[: i + 2], states[: i + 2], grid[i + 1]
    return times, states, None


def cumulative_simpson_even(y: np.ndarray, h: float) -> np.ndarray:
    """
    Running integral of ``y`` sampled with spacing ``h``, evaluated at the even nodes.

    ``y`` must have an odd number of samples. Element m is int_0^{2 m h} y.
    """
    if y.shape[0] % 2 != 1:
        raise ValueError("cumulative_simpson_even needs an odd number of samples")
    pieces = (h / 3.0) * (y[0:-2:2] + 4.0 * y[1:-1:2] + y[2::2])
    return np.concatenate([[0.0], np.cumsum(pieces)])
