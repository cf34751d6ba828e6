"""
Direct-collocation transcription with free final time.

The decision vector stacks ``[x_1..x_n, u_1..u_n, t_f]`` on a uniform grid
over ``[0, t_f]``. Each interval contributes one midpoint defect
``x'(t_mid) - f(t_mid, x(t_mid), u(t_mid))`` of the cubic Hermite state and
linear control interpolants. Dynamics are supplied in batched form
``f(t (N,), x (N, nx), u (N, nu)) -> (N, nx)``.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..exceptions import SolverError, TooShort
from ..model import EULER, ArrayLike, EulerAngles
from ..sim import Trajectory, attitude_error
from . import finite_difference as fd
from .interpolation import hermite_midpoint
from .solver import AugmentedLagrangianSolver, NonlinearProgram, SolverOptions, SolverReport

logger = logging.getLogger(__name__)

Dynamics = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class DecisionVector:
    """Node states ``(n, nx)``, node controls ``(n, nu)`` and final time."""

    states: np.ndarray
    controls: np.ndarray
    final_time: float

    def __post_init__(self) -> None:
        """Validate the decision vector after initialization."""
        states = np.array(self.states, dtype=float)
        controls = np.array(self.controls, dtype=float)
        if states.ndim != 2 or controls.ndim != 2:
            raise ValueError("states and controls must be 2-D arrays")
        if states.shape[0] < 2:
            raise ValueError("at least two grid nodes are required")
        if controls.shape[0] != states.shape[0]:
            raise ValueError("states and controls must have the same number of nodes")
        if not self.final_time > 0.0:
            raise ValueError("final_time must be positive")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "final_time", float(self.final_time))

    @property
    def n(self) -> int:
        return int(self.states.shape[0])

    @property
    def state_dim(self) -> int:
        return int(self.states.shape[1])

    @property
    def control_dim(self) -> int:
        return int(self.controls.shape[1])

    @property
    def times(self) -> np.ndarray:
        """Uniform grid over ``[0, final_time]``."""
        return np.linspace(0.0, self.final_time, self.n)

    def flatten(self) -> np.ndarray:
        """Return ``[x_1..x_n, u_1..u_n, t_f]``."""
        return np.concatenate([self.states.reshape(-1), self.controls.reshape(-1), [self.final_time]])

    @classmethod
    def from_flat(cls, y: ArrayLike, n: int, state_dim: int, control_dim: int) -> "DecisionVector":
        """Rebuild a decision vector from its flat layout."""
        y = np.asarray(y, dtype=float)
        split = n * state_dim
        expected = split + n * control_dim + 1
        if y.shape != (expected,):
            raise ValueError(f"decision vector must have shape ({expected},), got {y.shape}")
        return cls(
            states=y[:split].reshape(n, state_dim),
            controls=y[split:-1].reshape(n, control_dim),
            final_time=float(y[-1]),
        )


@dataclass(frozen=True, eq=False)
class CostWeights:
    """SPD weights on the attitude error (body-axis order) and the penalized controls."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self) -> None:
        for name in ("q", "r"):
            m = np.array(getattr(self, name), dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be a square matrix")
            if name == "q" and m.shape != (3, 3):
                raise ValueError("q must be 3x3")
            if not np.allclose(m, m.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            try:
                np.linalg.cholesky(m)
            except np.linalg.LinAlgError as exc:
                raise ValueError(f"{name} must be positive definite") from exc
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def diagonal(cls, q: ArrayLike, r: ArrayLike) -> "CostWeights":
        return cls(q=np.diag(np.asarray(q, dtype=float)), r=np.diag(np.asarray(r, dtype=float)))


def _optional(values: Optional[ArrayLike], shape: Tuple[int, ...], name: str, dtype: type = float) -> Optional[np.ndarray]:
    if values is None:
        return None
    arr = np.array(values, dtype=dtype)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """
    Grid, boundary conditions and bounds of a transcribed problem.

    Boundary conditions are equalities: the pinned initial state, the
    masked terminal state entries and, when ``displacement_index`` is set,
    ``x_n[k] - x_1[k] = forward_velocity * t_f``.

    ``control_matrix`` and ``control_limits`` add the per-node inequality
    ``G u_i <= h``; ``state_lower``/``state_upper`` box every node state.
    """

    n: int
    state_dim: int
    control_dim: int
    initial_state: Optional[np.ndarray] = None
    terminal_state: Optional[np.ndarray] = None
    terminal_mask: Optional[np.ndarray] = None
    displacement_index: Optional[int] = None
    forward_velocity: float = 0.0
    control_lower: Optional[np.ndarray] = None
    control_upper: Optional[np.ndarray] = None
    state_lower: Optional[np.ndarray] = None
    state_upper: Optional[np.ndarray] = None
    control_matrix: Optional[np.ndarray] = None
    control_limits: Optional[np.ndarray] = None
    tf_bounds: Tuple[float, float] = (0.5, 10.0)

    def __post_init__(self) -> None:
        """Validate the problem after initialization."""
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.state_dim < 1 or self.control_dim < 1:
            raise ValueError("state and control dimensions must be positive")
        nx, nu = self.state_dim, self.control_dim
        object.__setattr__(self, "initial_state", _optional(self.initial_state, (nx,), "initial_state"))
        object.__setattr__(self, "terminal_state", _optional(self.terminal_state, (nx,), "terminal_state"))
        mask = _optional(self.terminal_mask, (nx,), "terminal_mask", bool)
        if mask is None and self.terminal_state is not None:
            mask = np.ones(nx, dtype=bool)
        if mask is not None and mask.any() and self.terminal_state is None:
            raise ValueError("terminal_mask requires terminal_state")
        object.__setattr__(self, "terminal_mask", mask)
        if self.displacement_index is not None and not 0 <= self.displacement_index < nx:
            raise ValueError("displacement_index out of range")

        lower = _optional(self.control_lower, (nu,), "control_lower")
        upper = _optional(self.control_upper, (nu,), "control_upper")
        lower = np.full(nu, -np.inf) if lower is None else lower
        upper = np.full(nu, np.inf) if upper is None else upper
        if np.any(lower > upper):
            raise ValueError("control bounds must be nonempty intervals")
        object.__setattr__(self, "control_lower", lower)
        object.__setattr__(self, "control_upper", upper)

        lower = _optional(self.state_lower, (nx,), "state_lower")
        upper = _optional(self.state_upper, (nx,), "state_upper")
        lower = np.full(nx, -np.inf) if lower is None else lower
        upper = np.full(nx, np.inf) if upper is None else upper
        if np.any(lower > upper):
            raise ValueError("state bounds must be nonempty intervals")
        object.__setattr__(self, "state_lower", lower)
        object.__setattr__(self, "state_upper", upper)

        if (self.control_matrix is None) != (self.control_limits is None):
            raise ValueError("control_matrix and control_limits must be given together")
        if self.control_matrix is not None:
            matrix = np.array(self.control_matrix, dtype=float)
            if matrix.ndim != 2 or matrix.shape[1] != nu:
                raise ValueError(f"control_matrix must have {nu} columns")
            limits = _optional(self.control_limits, (matrix.shape[0],), "control_limits")
            matrix.setflags(write=False)
            object.__setattr__(self, "control_matrix", matrix)
            object.__setattr__(self, "control_limits", limits)

        lo, hi = self.tf_bounds
        if not 0.0 < lo <= hi:
            raise ValueError("tf_bounds must satisfy 0 < lower <= upper")
        object.__setattr__(self, "tf_bounds", (float(lo), float(hi)))

    @property
    def size(self) -> int:
        return self.n * (self.state_dim + self.control_dim) + 1

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Variable bounds in the flat decision layout."""
        lower = np.concatenate(
            [np.tile(self.state_lower, self.n), np.tile(self.control_lower, self.n), [self.tf_bounds[0]]]
        )
        upper = np.concatenate(
            [np.tile(self.state_upper, self.n), np.tile(self.control_upper, self.n), [self.tf_bounds[1]]]
        )
        return lower, upper

    @property
    def inequality_rows(self) -> int:
        """Rows of ``G`` per node; zero without control inequalities."""
        return 0 if self.control_matrix is None else int(self.control_matrix.shape[0])

    def inequality_residuals(self, decision: DecisionVector) -> np.ndarray:
        """``h - G u_i`` for every node, node-major; feasible where non-negative."""
        if self.control_matrix is None:
            return np.zeros(0)
        return (self.control_limits - decision.controls @ self.control_matrix.T).reshape(-1)

    def inequality_jacobian(self) -> np.ndarray:
        """Constant Jacobian of :meth:`inequality_residuals`."""
        m = self.inequality_rows
        jac = np.zeros((self.n * m, self.size))
        if m:
            nu = self.control_dim
            offset = self.n * self.state_dim
            for i in range(self.n):
                jac[i * m : (i + 1) * m, offset + i * nu : offset + (i + 1) * nu] = -self.control_matrix
        return jac

    def boundary_residuals(self, decision: DecisionVector) -> np.ndarray:
        """Stacked boundary equalities (zero when satisfied)."""
        parts = []
        x0, xn = decision.states[0], decision.states[-1]
        if self.initial_state is not None:
            parts.append(x0 - self.initial_state)
        if self.terminal_mask is not None and self.terminal_mask.any():
            parts.append((xn - self.terminal_state)[self.terminal_mask])
        if self.displacement_index is not None:
            k = self.displacement_index
            parts.append(np.array([xn[k] - x0[k] - self.forward_velocity * decision.final_time]))
        return np.concatenate(parts) if parts else np.zeros(0)

    def boundary_jacobian(self) -> np.ndarray:
        """Constant Jacobian of :meth:`boundary_residuals`."""
        nx = self.state_dim
        last = (self.n - 1) * nx
        rows = []
        if self.initial_state is not None:
            block = np.zeros((nx, self.size))
            block[:, :nx] = np.eye(nx)
            rows.append(block)
        if self.terminal_mask is not None and self.terminal_mask.any():
            idx = np.flatnonzero(self.terminal_mask)
            block = np.zeros((idx.size, self.size))
            block[np.arange(idx.size), last + idx] = 1.0
            rows.append(block)
        if self.displacement_index is not None:
            k = self.displacement_index
            row = np.zeros((1, self.size))
            row[0, last + k] = 1.0
            row[0, k] = -1.0
            row[0, -1] = -self.forward_velocity
            rows.append(row)
        return np.vstack(rows) if rows else np.zeros((0, self.size))

    def condition_counts(self) -> Dict[str, int]:
        """Number of defect and boundary equalities, plus the control inequalities."""
        boundary = 0
        if self.initial_state is not None:
            boundary += self.state_dim
        if self.terminal_mask is not None:
            boundary += int(self.terminal_mask.sum())
        if self.displacement_index is not None:
            boundary += 1
        defects = (self.n - 1) * self.state_dim
        return {
            "defects": defects,
            "boundary": boundary,
            "total": defects + boundary,
            "inequalities": self.n * self.inequality_rows,
        }


# ---------------------------------------------------------------------------
# Defects
# ---------------------------------------------------------------------------


def _midpoints(decision: DecisionVector, dynamics: Dynamics):
    t = decision.times
    x, u = decision.states, decision.controls
    f = np.asarray(dynamics(t, x, u), dtype=float)
    h = np.diff(t)
    x_mid, xdot_mid = hermite_midpoint(x[:-1], x[1:], f[:-1], f[1:], h)
    u_mid = 0.5 * (u[:-1] + u[1:])
    t_mid = t[:-1] + 0.5 * h
    return t, h, t_mid, x_mid, xdot_mid, u_mid


def defects(decision: DecisionVector, dynamics: Dynamics) -> np.ndarray:
    """
    Midpoint collocation residuals, stacked interval by interval.

    Returns:
        Flat array of length ``(n - 1) * nx``
    """
    _, _, t_mid, x_mid, xdot_mid, u_mid = _midpoints(decision, dynamics)
    return (xdot_mid - np.asarray(dynamics(t_mid, x_mid, u_mid), dtype=float)).reshape(-1)


def defect_jacobian(decision: DecisionVector, dynamics: Dynamics) -> np.ndarray:
    """
    Jacobian of :func:`defects` with respect to the flat decision vector.

    Node and midpoint dynamics Jacobians come from batched central
    differences and are chained through the Hermite midpoint formulas; only
    the final-time column is differenced directly.
    """
    n, nx, nu = decision.n, decision.state_dim, decision.control_dim
    t, h, t_mid, x_mid, _, u_mid = _midpoints(decision, dynamics)
    node = fd.batched_jacobian(dynamics, t, decision.states, decision.controls)
    mid = fd.batched_jacobian(dynamics, t_mid, x_mid, u_mid)
    a, b = node[..., :nx], node[..., nx:]
    am, bm = mid[..., :nx], mid[..., nx:]
    eye = np.eye(nx)

    size = n * (nx + nu) + 1
    jac = np.zeros(((n - 1) * nx, size))
    for j in range(n - 1):
        hj = h[j]
        rows = slice(j * nx, (j + 1) * nx)
        xj, xk = slice(j * nx, (j + 1) * nx), slice((j + 1) * nx, (j + 2) * nx)
        uj = slice(n * nx + j * nu, n * nx + (j + 1) * nu)
        uk = slice(n * nx + (j + 1) * nu, n * nx + (j + 2) * nu)
        jac[rows, xj] = -1.5 / hj * eye - 0.25 * a[j] - am[j] @ (0.5 * eye + hj / 8.0 * a[j])
        jac[rows, xk] = 1.5 / hj * eye - 0.25 * a[j + 1] - am[j] @ (0.5 * eye - hj / 8.0 * a[j + 1])
        jac[rows, uj] = -0.25 * b[j] - am[j] @ (hj / 8.0 * b[j]) - 0.5 * bm[j]
        jac[rows, uk] = -0.25 * b[j + 1] + am[j] @ (hj / 8.0 * b[j + 1]) - 0.5 * bm[j]

    tf = decision.final_time
    step = float(fd.fd_steps(tf))
    plus = DecisionVector(decision.states, decision.controls, tf + step)
    minus = DecisionVector(decision.states, decision.controls, tf - step)
    jac[:, -1] = (defects(plus, dynamics) - defects(minus, dynamics)) / (2.0 * step)
    return jac


# ---------------------------------------------------------------------------
# Costs
# ---------------------------------------------------------------------------


class CollocationCost(ABC):
    """Objective of a transcribed problem."""

    @abstractmethod
    def value(self, decision: DecisionVector) -> float:
        """Cost of a decision vector."""

    def gradient(self, decision: DecisionVector) -> np.ndarray:
        """Gradient with respect to the flat layout (finite differences by default)."""
        n, nx, nu = decision.n, decision.state_dim, decision.control_dim
        return fd.gradient(lambda y: self.value(DecisionVector.from_flat(y, n, nx, nu)), decision.flatten())


def _body_errors(states: np.ndarray, reference: EulerAngles) -> np.ndarray:
    # [yaw, pitch, roll] -> body axes [roll, pitch, yaw]
    return attitude_error(states, reference)[..., ::-1]


class AttitudeEffortCost(CollocationCost):
    """
    ``J = sum_i x_e,i^T Q x_e,i + v_i^T R v_i`` over all ``n`` nodes.

    ``x_e`` is the attitude error in body-axis order and ``v_i = P u_i`` the
    penalized control subvector selected by ``penalty_map`` (for example the
    fan forces recovered from the wrench, or the wrench itself).
    """

    def __init__(
        self,
        weights: CostWeights,
        penalty_map: np.ndarray,
        reference: Optional[EulerAngles] = None,
    ) -> None:
        self.weights = weights
        self.penalty_map = np.asarray(penalty_map, dtype=float)
        if self.penalty_map.shape[0] != weights.r.shape[0]:
            raise ValueError("penalty_map rows must match the dimension of R")
        self.reference = reference or EulerAngles()
        self._control_hessian = self.penalty_map.T @ weights.r @ self.penalty_map

    def value(self, decision: DecisionVector) -> float:
        e = _body_errors(decision.states, self.reference)
        v = decision.controls @ self.penalty_map.T
        attitude = np.einsum("ni,ij,nj->", e, self.weights.q, e)
        effort = np.einsum("ni,ij,nj->", v, self.weights.r, v)
        return float(attitude + effort)

    def gradient(self, decision: DecisionVector) -> np.ndarray:
        n, nx = decision.n, decision.state_dim
        e = _body_errors(decision.states, self.reference)
        grad_states = np.zeros((n, nx))
        # d x_e / d Phi = -I away from the pitch singularity
        grad_states[:, EULER] = -2.0 * (e @ self.weights.q)[:, ::-1]
        grad_controls = 2.0 * decision.controls @ self._control_hessian
        return np.concatenate([grad_states.reshape(-1), grad_controls.reshape(-1), [0.0]])


class EffortIntegralCost(CollocationCost):
    """
    Exact integral of ``u_k(t)^2`` under the linear control interpolant.

    ``sum_j h/3 (u_j^2 + u_j u_j+1 + u_j+1^2)`` with ``h = t_f / (n - 1)``.
    """

    def __init__(self, control_index: int = 0) -> None:
        self.control_index = control_index

    def value(self, decision: DecisionVector) -> float:
        u = decision.controls[:, self.control_index]
        h = decision.final_time / (decision.n - 1)
        return float(h / 3.0 * np.sum(u[:-1] ** 2 + u[:-1] * u[1:] + u[1:] ** 2))

    def gradient(self, decision: DecisionVector) -> np.ndarray:
        n, nx, nu = decision.n, decision.state_dim, decision.control_dim
        u = decision.controls[:, self.control_index]
        h = decision.final_time / (n - 1)
        du = np.zeros(n)
        du[:-1] += h / 3.0 * (2.0 * u[:-1] + u[1:])
        du[1:] += h / 3.0 * (2.0 * u[1:] + u[:-1])
        grad_controls = np.zeros((n, nu))
        grad_controls[:, self.control_index] = du
        return np.concatenate([np.zeros(n * nx), grad_controls.reshape(-1), [self.value(decision) / decision.final_time]])


def cost(
    decision: DecisionVector,
    weights: CostWeights,
    reference: Optional[EulerAngles] = None,
    penalty_map: Optional[np.ndarray] = None,
) -> float:
    """
    Quadratic attitude-error and control-effort cost summed over the nodes.

    Without ``penalty_map`` the first ``dim(R)`` control entries are
    penalized directly.
    """
    if penalty_map is None:
        k = weights.r.shape[0]
        penalty_map = np.eye(k, decision.control_dim)
    return AttitudeEffortCost(weights, penalty_map, reference).value(decision)


# ---------------------------------------------------------------------------
# Program and solve
# ---------------------------------------------------------------------------


class CollocationProgram(NonlinearProgram):
    """Transcribed optimal-control problem in the solver's interface."""

    def __init__(self, problem: ProblemSpec, dynamics: Dynamics, objective: CollocationCost) -> None:
        self.problem = problem
        self.dynamics = dynamics
        self.cost = objective
        self._boundary_jacobian = problem.boundary_jacobian()
        self._inequality_jacobian = problem.inequality_jacobian()

    @property
    def size(self) -> int:
        return self.problem.size

    def decision(self, y: ArrayLike) -> DecisionVector:
        p = self.problem
        return DecisionVector.from_flat(y, p.n, p.state_dim, p.control_dim)

    def objective(self, y: np.ndarray) -> float:
        return self.cost.value(self.decision(y))

    def gradient(self, y: np.ndarray) -> np.ndarray:
        return self.cost.gradient(self.decision(y))

    def constraints(self, y: np.ndarray) -> np.ndarray:
        d = self.decision(y)
        return np.concatenate([defects(d, self.dynamics), self.problem.boundary_residuals(d)])

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        return np.vstack([defect_jacobian(self.decision(y), self.dynamics), self._boundary_jacobian])

    def inequalities(self, y: np.ndarray) -> np.ndarray:
        return self.problem.inequality_residuals(self.decision(y))

    def inequality_jacobian(self, y: np.ndarray) -> np.ndarray:
        return self._inequality_jacobian

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.problem.bounds()


def nlp_solve(
    problem: ProblemSpec,
    objective: CollocationCost,
    dynamics: Dynamics,
    initial_guess: DecisionVector,
    options: Optional[SolverOptions] = None,
) -> Tuple[DecisionVector, SolverReport]:
    """
    Solve a transcribed problem from a warm start.

    Raises:
        MaxIter, LineSearchFail, SolverNonFinite: With ``best`` set to the
            best ``(DecisionVector, SolverReport)`` pair found
    """
    if (initial_guess.n, initial_guess.state_dim, initial_guess.control_dim) != (
        problem.n,
        problem.state_dim,
        problem.control_dim,
    ):
        raise ValueError("initial guess does not match the problem dimensions")
    program = CollocationProgram(problem, dynamics, objective)
    counts = problem.condition_counts()
    logger.info(f"Collocation: n={problem.n}, {program.size} variables, conditions {counts}")
    try:
        result = AugmentedLagrangianSolver(program, options).solve(initial_guess.flatten())
    except SolverError as exc:
        if exc.best is not None:
            exc.best.report.extra["conditions"] = counts
            exc.best = (program.decision(exc.best.y), exc.best.report)
        raise
    result.report.extra["conditions"] = counts
    return program.decision(result.y), result.report


# ---------------------------------------------------------------------------
# Warm start
# ---------------------------------------------------------------------------


def _resample(times: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    out = np.empty((grid.size, values.shape[1]))
    dt = times[1] - times[0] if times.size > 1 else 1.0
    position = (grid - times[0]) / dt
    nearest = np.clip(np.rint(position).astype(int), 0, times.size - 1)
    exact = np.abs(position - nearest) < 1e-9
    out[exact] = values[nearest[exact]]
    if not exact.all():
        for k in range(values.shape[1]):
            out[~exact, k] = np.interp(grid[~exact], times, values[:, k])
    return out


def seed_from_simulation(trajectory: Trajectory, n: int, final_time: Optional[float] = None) -> DecisionVector:
    """
    Resample a simulated trajectory onto the collocation grid.

    Args:
        trajectory: Simulation output starting at t = 0
        n: Number of grid nodes
        final_time: Horizon; defaults to the trajectory duration

    Raises:
        TooShort: If the trajectory does not cover the horizon
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    tf = trajectory.duration if final_time is None else float(final_time)
    if len(trajectory) < 2 or trajectory.duration < tf - 1e-9 * max(1.0, tf) or not tf > 0.0:
        raise TooShort(f"trajectory covers {trajectory.duration:.6f} s, horizon {tf:.6f} s requested")
    grid = np.linspace(0.0, tf, n) + trajectory.times[0]
    return DecisionVector(
        states=_resample(trajectory.times, trajectory.states, grid),
        controls=_resample(trajectory.times, trajectory.controls, grid),
        final_time=tf,
    )
