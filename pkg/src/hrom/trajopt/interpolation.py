"""
Piecewise interpolants of the collocation transcription.

Controls are linear between nodes. States are cubic Hermite polynomials
matching the node values and the dynamics at both ends of an interval:

    x(tau) = c0 + c1 tau + c2 tau^2 + c3 tau^3,   tau = (t - t_j) / h_j

    c0 = x_j
    c1 = h_j f_j
    c2 = -3 x_j - 2 h_j f_j + 3 x_j+1 - h_j f_j+1
    c3 =  2 x_j +   h_j f_j - 2 x_j+1 + h_j f_j+1
"""

from typing import Tuple

import numpy as np

from ..exceptions import DegenerateInterval, OutOfRange
from ..model import ArrayLike

# Relative slack on interval membership to absorb grid rounding
_EDGE_TOL = 1e-12


def _check_interval(t_i: float, t_j: float, t: float) -> float:
    h = t_j - t_i
    if not h > 0.0:
        raise DegenerateInterval(f"interval [{t_i}, {t_j}] has non-positive length")
    slack = _EDGE_TOL * max(1.0, abs(t_i), abs(t_j))
    if t < t_i - slack or t > t_j + slack:
        raise OutOfRange(f"time {t} outside [{t_i}, {t_j}]")
    return h


def control_interp(u_i: ArrayLike, u_j: ArrayLike, t_i: float, t_j: float, t: float) -> np.ndarray:
    """
    Linear control interpolant on ``[t_i, t_j]``.

    Raises:
        DegenerateInterval: If ``t_j <= t_i``
        OutOfRange: If ``t`` lies outside the interval
    """
    h = _check_interval(t_i, t_j, t)
    u_i = np.asarray(u_i, dtype=float)
    u_j = np.asarray(u_j, dtype=float)
    return u_i + (t - t_i) / h * (u_j - u_i)


def hermite_coefficients(
    x_j: ArrayLike, x_j1: ArrayLike, f_j: ArrayLike, f_j1: ArrayLike, h: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients ``(c0, c1, c2, c3)`` of the cubic in normalized time."""
    x_j, x_j1 = np.asarray(x_j, dtype=float), np.asarray(x_j1, dtype=float)
    f_j, f_j1 = np.asarray(f_j, dtype=float), np.asarray(f_j1, dtype=float)
    c0 = x_j
    c1 = h * f_j
    c2 = -3.0 * x_j - 2.0 * h * f_j + 3.0 * x_j1 - h * f_j1
    c3 = 2.0 * x_j + h * f_j - 2.0 * x_j1 + h * f_j1
    return c0, c1, c2, c3


def state_interp(
    x_j: ArrayLike,
    x_j1: ArrayLike,
    f_j: ArrayLike,
    f_j1: ArrayLike,
    t_j: float,
    t_j1: float,
    t: float,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cubic Hermite state interpolant and its time derivative.

    Args:
        x_j: State at ``t_j``
        x_j1: State at ``t_j1``
        f_j: Dynamics at ``t_j``
        f_j1: Dynamics at ``t_j1``
        t_j: Interval start
        t_j1: Interval end
        t: Evaluation time

    Returns:
        Tuple ``(x(t), x'(t))``

    Raises:
        DegenerateInterval: If ``t_j1 <= t_j``
        OutOfRange: If ``t`` lies outside the interval
    """
    h = _check_interval(t_j, t_j1, t)
    c0, c1, c2, c3 = hermite_coefficients(x_j, x_j1, f_j, f_j1, h)
    tau = (t - t_j) / h
    value = c0 + tau * (c1 + tau * (c2 + tau * c3))
    slope = (c1 + tau * (2.0 * c2 + 3.0 * tau * c3)) / h
    return value, slope


def hermite_midpoint(
    x_j: ArrayLike, x_j1: ArrayLike, f_j: ArrayLike, f_j1: ArrayLike, h: ArrayLike
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Interpolant value and slope at the interval midpoint.

    Broadcasts over leading dimensions; ``h`` may be a scalar or carry one
    entry per interval (trailing axis added automatically).
    """
    x_j, x_j1 = np.asarray(x_j, dtype=float), np.asarray(x_j1, dtype=float)
    f_j, f_j1 = np.asarray(f_j, dtype=float), np.asarray(f_j1, dtype=float)
    h = np.asarray(h, dtype=float)
    if h.ndim:
        h = h[..., None]
    value = 0.5 * (x_j + x_j1) + h * (f_j - f_j1) / 8.0
    slope = -1.5 * (x_j - x_j1) / h - 0.25 * (f_j + f_j1)
    return value, slope
