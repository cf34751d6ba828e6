"""
Augmented-Lagrangian NLP solver.

Solves ``min J(y)`` subject to ``c(y) = 0``, ``g(y) >= 0`` and
``lower <= y <= upper``. Each outer iteration minimizes

    L_rho(y, lam, mu) = J(y) + lam^T c + rho/2 |c|^2
                        + 1/(2 rho) (|max(0, mu - rho g)|^2 - |mu|^2)

over the box with L-BFGS-B, a projected quasi-Newton method, then updates
the multipliers ``lam += rho c`` and ``mu = max(0, mu - rho g)``. The
penalty grows tenfold whenever the constraint violation fails to shrink to
a quarter of its previous value.

Trial points at which the program cannot be evaluated score far above the
last evaluated merit, so the inner line search backs off instead of
aborting the solve.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import Bounds, minimize

from ..exceptions import HromError, LineSearchFail, MaxIter, SolverNonFinite
from . import finite_difference as fd

logger = logging.getLogger(__name__)


class NonlinearProgram(ABC):
    """
    Smooth program with equality and inequality constraints and simple bounds.

    Subclasses provide the objective and constraints; gradients default to
    central finite differences. Inequalities read ``g(y) >= 0``.
    """

    @property
    @abstractmethod
    def size(self) -> int:
        """Number of decision variables."""

    @abstractmethod
    def objective(self, y: np.ndarray) -> float:
        """Objective value."""

    def gradient(self, y: np.ndarray) -> np.ndarray:
        return fd.gradient(self.objective, y)

    def constraints(self, y: np.ndarray) -> np.ndarray:
        """Equality residuals; empty when unconstrained."""
        return np.zeros(0)

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        return fd.jacobian(self.constraints, y)

    def inequalities(self, y: np.ndarray) -> np.ndarray:
        """Inequality values, feasible where non-negative; empty by default."""
        return np.zeros(0)

    def inequality_jacobian(self, y: np.ndarray) -> np.ndarray:
        return fd.jacobian(self.inequalities, y)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper bounds (infinite when absent)."""
        return np.full(self.size, -np.inf), np.full(self.size, np.inf)


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and limits of :class:`AugmentedLagrangianSolver`."""

    tol_c: float = 1e-4
    tol_g: float = 1e-3
    max_iter: int = 200
    inner_max_iter: int = 500
    penalty: float = 10.0
    penalty_growth: float = 10.0
    max_penalty: float = 1e12
    progress_ratio: float = 0.25

    def __post_init__(self) -> None:
        """Validate options after initialization."""
        if not self.tol_c > 0.0 or not self.tol_g > 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.inner_max_iter < 1:
            raise ValueError("iteration limits must be at least 1")
        if not self.penalty > 0.0 or not self.penalty_growth > 1.0:
            raise ValueError("penalty must be positive and grow by a factor > 1")
        if not 0.0 < self.progress_ratio < 1.0:
            raise ValueError("progress_ratio must lie in (0, 1)")


@dataclass
class SolverReport:
    """
    Outcome of a solve.

    ``constraint_violation`` covers both the equality residuals and the
    negative part of the inequalities. ``lower_multipliers``/
    ``upper_multipliers`` are the non-negative bound multipliers recovered
    from the Lagrangian gradient at active bounds.
    """

    success: bool
    status: str
    iterations: int
    inner_iterations: int
    cost: float
    constraint_violation: float
    stationarity: float
    penalty: float
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    inequality_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lower_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    upper_multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    message: str = ""
    extra: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        """JSON-ready view of the report."""
        out: Dict[str, Any] = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            out[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return out


@dataclass
class SolverResult:
    """Iterate and report; also the payload of :class:`SolverError`."""

    y: np.ndarray
    report: SolverReport


class _EvaluationFailure(Exception):
    def __init__(self, cause: Optional[Exception] = None) -> None:
        super().__init__(str(cause) if cause else "non-finite merit value")
        self.cause = cause


def projected_gradient(y: np.ndarray, g: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """``y - P(y - g)``; zero exactly at box-constrained stationary points."""
    return y - np.clip(y - g, lower, upper)


def constraint_violation(c: np.ndarray, g: np.ndarray) -> float:
    """Largest equality residual or inequality shortfall."""
    worst = float(np.max(np.abs(c))) if c.size else 0.0
    if g.size:
        worst = max(worst, float(np.max(-g)))
    return worst


class AugmentedLagrangianSolver:
    """
    Augmented-Lagrangian outer loop around L-BFGS-B.

    Example:
        >>> solver = AugmentedLagrangianSolver(program)
        >>> result = solver.solve(y0)
        >>> result.report.constraint_violation < 1e-4
        True
    """

    DEFAULT_OPTIONS = SolverOptions()
    # A trial point the program cannot evaluate scores this many times
    # (1 + |merit|) above the last evaluated merit.
    REJECTED_MERIT_JUMP = 1e3

    def __init__(self, program: NonlinearProgram, options: Optional[SolverOptions] = None) -> None:
        self.program = program
        self.options = options or self.DEFAULT_OPTIONS
        self._lower, self._upper = (np.asarray(b, dtype=float) for b in program.bounds())
        if np.any(self._lower > self._upper):
            raise ValueError("lower bounds exceed upper bounds")
        self.rejected_trials = 0
        self._last_merit = 0.0

    # -- evaluation ---------------------------------------------------------

    def _evaluate(self, y: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        try:
            cost = float(self.program.objective(y))
            c = np.asarray(self.program.constraints(y), dtype=float)
            g = np.asarray(self.program.inequalities(y), dtype=float)
        except HromError as exc:
            raise _EvaluationFailure(exc) from exc
        if not math.isfinite(cost) or not np.all(np.isfinite(c)) or not np.all(np.isfinite(g)):
            raise _EvaluationFailure()
        return cost, c, g

    def _lagrangian_gradient(self, y: np.ndarray, weights: np.ndarray, inequality_weights: np.ndarray) -> np.ndarray:
        try:
            grad = np.asarray(self.program.gradient(y), dtype=float)
            if weights.size:
                grad = grad + self.program.jacobian(y).T @ weights
            if inequality_weights.size and np.any(inequality_weights):
                grad = grad - self.program.inequality_jacobian(y).T @ inequality_weights
        except HromError as exc:
            raise _EvaluationFailure(exc) from exc
        if not np.all(np.isfinite(grad)):
            raise _EvaluationFailure()
        return grad

    def _merit(self, y: np.ndarray, lam: np.ndarray, mu: np.ndarray, rho: float) -> Tuple[float, np.ndarray]:
        try:
            cost, c, g = self._evaluate(y)
            shifted = np.maximum(0.0, mu - rho * g)
            value = cost + lam @ c + 0.5 * rho * (c @ c) + (shifted @ shifted - mu @ mu) / (2.0 * rho)
            grad = self._lagrangian_gradient(y, lam + rho * c, shifted)
        except _EvaluationFailure as exc:
            self.rejected_trials += 1
            logger.debug(f"Rejected trial point: {exc}")
            base = self._last_merit
            return base + self.REJECTED_MERIT_JUMP * (1.0 + abs(base)), np.zeros_like(y)
        self._last_merit = value
        return value, grad

    def _report(
        self,
        y: np.ndarray,
        lam: np.ndarray,
        mu: np.ndarray,
        rho: float,
        iterations: int,
        inner: int,
        status: str,
        message: str = "",
    ) -> SolverReport:
        cost, c, g = self._evaluate(y)
        grad = self._lagrangian_gradient(y, lam, mu)
        lo, hi = self._lower, self._upper
        at_lower = y <= lo + 1e-10 * np.maximum(1.0, np.abs(lo))
        at_upper = y >= hi - 1e-10 * np.maximum(1.0, np.abs(hi))
        return SolverReport(
            success=status == "converged",
            status=status,
            iterations=iterations,
            inner_iterations=inner,
            cost=cost,
            constraint_violation=constraint_violation(c, g),
            stationarity=float(np.max(np.abs(projected_gradient(y, grad, lo, hi)))) if y.size else 0.0,
            penalty=rho,
            multipliers=lam.copy(),
            inequality_multipliers=mu.copy(),
            lower_multipliers=np.where(at_lower, np.maximum(grad, 0.0), 0.0),
            upper_multipliers=np.where(at_upper, np.maximum(-grad, 0.0), 0.0),
            message=message,
        )

    # -- main loop ----------------------------------------------------------

    def solve(self, y0: np.ndarray) -> SolverResult:
        """
        Solve from ``y0`` (clipped into the bounds).

        The clipped start is the first candidate for the best iterate, so
        every solver error raised after it carries a usable ``best``.

        Returns:
            SolverResult with a converged report

        Raises:
            MaxIter: If the outer iteration cap is reached
            LineSearchFail: If the inner minimization stalls
            SolverNonFinite: If the start or an accepted iterate cannot be evaluated
        """
        opts = self.options
        y0 = np.asarray(y0, dtype=float)
        if y0.shape != (self.program.size,):
            raise ValueError(f"initial guess must have shape ({self.program.size},), got {y0.shape}")
        y = np.clip(y0, self._lower, self._upper)
        rho = opts.penalty
        inner = 0
        self.rejected_trials = 0

        try:
            _, c, g = self._evaluate(y)
            lam = np.zeros(c.size)
            mu = np.zeros(g.size)
            start = self._report(y, lam, mu, rho, 0, 0, "initial")
        except _EvaluationFailure as exc:
            raise SolverNonFinite("initial guess cannot be evaluated", cause=exc.cause) from exc
        best = SolverResult(y.copy(), start)
        self._last_merit = start.cost
        violation = start.constraint_violation
        bounds = Bounds(self._lower, self._upper)
        logger.info(
            f"Augmented Lagrangian: {self.program.size} variables, {c.size} equality and "
            f"{g.size} inequality constraints, initial violation {violation:.3e}"
        )

        for iteration in range(1, opts.max_iter + 1):
            res = minimize(
                self._merit,
                y,
                args=(lam, mu, rho),
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": opts.inner_max_iter, "gtol": 0.1 * opts.tol_g, "ftol": 1e-15},
            )
            inner += int(res.nit)
            y_new = np.clip(res.x, self._lower, self._upper)
            try:
                _, c, g = self._evaluate(y_new)
                lam_new = lam + rho * c
                mu_new = np.maximum(0.0, mu - rho * g)
                report = self._report(y_new, lam_new, mu_new, rho, iteration, inner, "running", str(res.message))
            except _EvaluationFailure as exc:
                raise SolverNonFinite(
                    f"merit function not finite at outer iteration {iteration}", best=best, cause=exc.cause
                ) from exc

            stalled = res.status == 2 and np.array_equal(y_new, y)
            progress = report.constraint_violation
            if g.size:
                progress = max(progress, float(np.max(np.abs(np.minimum(g, mu / rho)))))
            y, lam, mu = y_new, lam_new, mu_new
            if report.constraint_violation < best.report.constraint_violation or (
                report.constraint_violation == best.report.constraint_violation and report.cost < best.report.cost
            ):
                best = SolverResult(y.copy(), report)

            logger.debug(
                f"Outer {iteration}: cost={report.cost:.6e} violation={report.constraint_violation:.3e} "
                f"stationarity={report.stationarity:.3e} penalty={rho:.1e} inner={res.nit} "
                f"rejected={self.rejected_trials}"
            )

            if report.constraint_violation <= opts.tol_c and report.stationarity <= opts.tol_g:
                report.status, report.success = "converged", True
                logger.info(
                    f"Converged after {iteration} outer / {inner} inner iterations: "
                    f"cost={report.cost:.6e} violation={report.constraint_violation:.3e}"
                )
                return SolverResult(y, report)
            if stalled:
                best.report.status = "line_search_failed"
                raise LineSearchFail(f"inner minimization stalled: {res.message}", best=best)

            if progress > opts.progress_ratio * violation:
                rho = min(rho * opts.penalty_growth, opts.max_penalty)
            violation = progress

        best.report.status = "max_iter"
        logger.warning(
            f"Iteration cap {opts.max_iter} reached: violation={best.report.constraint_violation:.3e} "
            f"stationarity={best.report.stationarity:.3e}"
        )
        raise MaxIter(f"no convergence within {opts.max_iter} outer iterations", best=best)
