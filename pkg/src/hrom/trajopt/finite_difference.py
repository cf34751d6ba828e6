"""
Central finite differences.

Every routine perturbs one coordinate at a time with the adaptive step
``max(1e-6, 1e-7 |y|)``. Columns are assembled by fixed index so the
result does not depend on evaluation order.
"""

from typing import Callable, Optional

import numpy as np

from ..model import ArrayLike

MIN_STEP = 1e-6
REL_STEP = 1e-7

ScalarFunction = Callable[[np.ndarray], float]
VectorFunction = Callable[[np.ndarray], np.ndarray]
BatchDynamics = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def fd_steps(y: ArrayLike, scale: float = 1.0) -> np.ndarray:
    """Adaptive step sizes for the entries of ``y``."""
    y = np.asarray(y, dtype=float)
    return scale * np.maximum(MIN_STEP, REL_STEP * np.abs(y))


def gradient(fun: ScalarFunction, y: ArrayLike, steps: Optional[np.ndarray] = None) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    y = np.asarray(y, dtype=float)
    steps = fd_steps(y) if steps is None else steps
    grad = np.empty_like(y)
    shifted = y.copy()
    for j in range(y.size):
        shifted[j] = y[j] + steps[j]
        f_plus = fun(shifted)
        shifted[j] = y[j] - steps[j]
        f_minus = fun(shifted)
        shifted[j] = y[j]
        grad[j] = (f_plus - f_minus) / (2.0 * steps[j])
    return grad


def richardson_gradient(fun: ScalarFunction, y: ArrayLike) -> np.ndarray:
    """
    Richardson-extrapolated central differences.

    Combines the default step and twice the default step to cancel the
    leading truncation term; used to audit :func:`gradient`.
    """
    y = np.asarray(y, dtype=float)
    fine = gradient(fun, y, fd_steps(y))
    coarse = gradient(fun, y, fd_steps(y, scale=2.0))
    return (4.0 * fine - coarse) / 3.0


def jacobian(fun: VectorFunction, y: ArrayLike) -> np.ndarray:
    """Central-difference Jacobian ``(m, n)`` of a vector function."""
    y = np.asarray(y, dtype=float)
    steps = fd_steps(y)
    columns = []
    shifted = y.copy()
    for j in range(y.size):
        shifted[j] = y[j] + steps[j]
        f_plus = np.asarray(fun(shifted), dtype=float)
        shifted[j] = y[j] - steps[j]
        f_minus = np.asarray(fun(shifted), dtype=float)
        shifted[j] = y[j]
        columns.append((f_plus - f_minus) / (2.0 * steps[j]))
    if not columns:
        return np.zeros((np.asarray(fun(y)).size, 0))
    return np.stack(columns, axis=-1)


def batched_jacobian(f: BatchDynamics, t: ArrayLike, x: ArrayLike, u: ArrayLike) -> np.ndarray:
    """
    Jacobians of batched dynamics with respect to ``[x, u]``.

    All perturbed points are stacked and evaluated in a single call of
    ``f(t (N,), x (N, nx), u (N, nu)) -> (N, nx)``.

    Returns:
        Array ``(N, nx, nx + nu)``
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    nx = x.shape[-1]
    z = np.concatenate([x, u], axis=-1)
    count, m = z.shape
    steps = fd_steps(z)

    shift = np.eye(m)[:, None, :] * steps[None, :, :]
    stencil = np.concatenate([z[None] + shift, z[None] - shift], axis=0).reshape(2 * m * count, m)
    values = np.asarray(f(np.tile(t, 2 * m), stencil[:, :nx], stencil[:, nx:]), dtype=float)
    values = values.reshape(2, m, count, -1)
    jac = (values[0] - values[1]) / (2.0 * steps.T[:, :, None])
    return np.transpose(jac, (1, 2, 0))
