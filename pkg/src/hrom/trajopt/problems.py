"""
Concrete transcribed problems.

``hrom_problem`` poses the thruster-command optimization for the walking
robot, warm-started from a simulation of the heuristic gait.
``double_integrator_problem`` is the rest-to-rest minimum-effort benchmark
whose optimum (cost 12, ``u = 6 - 12 t``) is known in closed form.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from typing_extensions import Literal

from ..contact import GroundParams
from ..dynamics import CONTROL_DIM, JOINT_INPUTS, state_derivative, thruster_allocation_matrix
from ..gait import GaitPlan, JointReference, TrackingGains, joint_reference
from ..model import EULER, JOINT_RATES, JOINTS, STATE_DIM, EulerAngles, RobotParams
from ..sim import Trajectory
from .collocation import (
    AttitudeEffortCost,
    CollocationCost,
    CostWeights,
    DecisionVector,
    Dynamics,
    EffortIntegralCost,
    ProblemSpec,
    seed_from_simulation,
)
from .solver import SolverOptions

logger = logging.getLogger(__name__)

BOUNDARY_TERMS: Tuple[str, ...] = ("initial", "displacement", "attitude", "lateral")
# Clearance (rad) between the node pitch bound and the Euler-rate guard.
PITCH_MARGIN = 0.1
Penalize = Literal["edf", "wrench"]


@dataclass(frozen=True)
class OptConfig:
    """Transcription and solver settings of an ``optimize`` run."""

    problem: str = "hrom"
    n: int = 21
    tol_c: float = 1e-4
    tol_g: float = 1e-3
    max_iter: int = 200
    inner_max_iter: int = 500
    tf_bounds: Tuple[float, float] = (0.5, 10.0)
    penalize: Penalize = "edf"
    free_joint_inputs: bool = False
    q_weights: Tuple[float, ...] = (100.0, 100.0, 100.0)
    r_weights: Tuple[float, ...] = (1e-3, 1e-3, 1e-3, 1e-3)
    boundary: Tuple[str, ...] = BOUNDARY_TERMS

    def __post_init__(self) -> None:
        """Validate settings after initialization."""
        if self.problem not in ("hrom", "double_integrator"):
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.penalize not in ("edf", "wrench"):
            raise ValueError("penalize must be 'edf' or 'wrench'")
        unknown = set(self.boundary) - set(BOUNDARY_TERMS)
        if unknown:
            raise ValueError(f"unknown boundary terms {sorted(unknown)}")
        if len(self.q_weights) != 3:
            raise ValueError("q_weights must have 3 entries")
        expected = 4 if self.penalize == "edf" else 6
        if len(self.r_weights) != expected:
            raise ValueError(f"r_weights must have {expected} entries when penalizing {self.penalize!r}")

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            tol_c=self.tol_c, tol_g=self.tol_g, max_iter=self.max_iter, inner_max_iter=self.inner_max_iter
        )


class HromDynamics:
    """
    Batched collocation dynamics of the walking robot.

    Unless joint inputs are free decision variables, the leg inputs are
    replaced by the gait tracking law evaluated at each node, so the
    optimizer acts on the thrust wrench only. Joint references are cached
    per time instant.
    """

    CACHE_SIZE = 4096

    def __init__(
        self,
        robot: RobotParams,
        ground: GroundParams,
        gait: GaitPlan,
        tracking: TrackingGains = TrackingGains(),
        free_joint_inputs: bool = False,
    ) -> None:
        self.robot = robot
        self.ground = ground
        self.gait = gait
        self.tracking = tracking
        self.free_joint_inputs = free_joint_inputs
        self._references: Dict[float, JointReference] = {}

    def reference(self, t: float) -> JointReference:
        t = min(max(float(t), 0.0), self.gait.params.duration)
        ref = self._references.get(t)
        if ref is None:
            if len(self._references) >= self.CACHE_SIZE:
                self._references.clear()
            ref = joint_reference(t, self.gait, self.robot)
            self._references[t] = ref
        return ref

    def joint_inputs(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Tracking-law joint accelerations ``(N, 12)`` for batched states."""
        refs = [self.reference(ti) for ti in np.asarray(t, dtype=float)]
        q_ref = np.stack([r.positions for r in refs])
        qd_ref = np.stack([r.rates for r in refs])
        qdd_ref = np.stack([r.accels for r in refs])
        return (
            qdd_ref
            + self.tracking.kp * (q_ref - x[:, JOINTS])
            + self.tracking.kd * (qd_ref - x[:, JOINT_RATES])
        )

    def __call__(self, t: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.array(u, dtype=float)
        if not self.free_joint_inputs:
            u[:, JOINT_INPUTS] = self.joint_inputs(t, x)
        return state_derivative(x, u, self.robot, self.ground)

    def full_controls(self, decision: DecisionVector) -> np.ndarray:
        """Node controls with the leg inputs actually applied."""
        u = decision.controls.copy()
        if not self.free_joint_inputs:
            u[:, JOINT_INPUTS] = self.joint_inputs(decision.times, decision.states)
        return u


def wrench_bounds(robot: RobotParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Component bounds of the achievable thrust wrench.

    Force along the fan axis lies in ``[0, min(4 f_max, budget)]``; each
    moment about a body axis is bounded by all fans on one side at full
    thrust. Components the fans cannot produce are pinned at zero.
    """
    a = thruster_allocation_matrix(robot)
    f_max = robot.max_thrust_per_edf
    upper = f_max * np.sum(np.maximum(a, 0.0), axis=1)
    lower = f_max * np.sum(np.minimum(a, 0.0), axis=1)
    upper[:3] = np.minimum(upper[:3], robot.thrust_budget)
    lower[:3] = np.maximum(lower[:3], -robot.thrust_budget)
    tiny = np.abs(upper - lower) < 1e-12
    lower[tiny] = upper[tiny] = 0.0
    return lower, upper


def fan_inequalities(robot: RobotParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Linear limits on the fan forces behind a commanded wrench.

    Returns ``(G, h)`` over the full control vector such that ``G u <= h``
    holds exactly when the minimum-norm split ``f = A^+ w`` that
    :func:`~hrom.dynamics.wrench_allocation` applies needs no clipping:
    every fan in ``[0, f_max]`` and the fans together within the budget.
    """
    split = np.zeros((4, CONTROL_DIM))
    split[:, :6] = np.linalg.pinv(thruster_allocation_matrix(robot))
    matrix = np.vstack([-split, split, split.sum(axis=0, keepdims=True)])
    limits = np.concatenate([np.zeros(4), np.full(4, robot.max_thrust_per_edf), [robot.thrust_budget]])
    return matrix, limits


def pitch_limit(robot: RobotParams) -> float:
    """Largest node pitch magnitude kept clear of the Euler-rate guard."""
    guard = math.acos(robot.eps_pitch)
    return guard - min(PITCH_MARGIN, 0.5 * guard)


def penalty_map(robot: RobotParams, penalize: Penalize) -> np.ndarray:
    """Rows selecting the penalized control subvector from ``[f, m, u_L]``."""
    out = np.zeros((4 if penalize == "edf" else 6, CONTROL_DIM))
    if penalize == "edf":
        out[:, :6] = np.linalg.pinv(thruster_allocation_matrix(robot))
    else:
        out[:, :6] = np.eye(6)
    return out


def hrom_problem(
    seed: Trajectory,
    robot: RobotParams,
    ground: GroundParams,
    gait: GaitPlan,
    opt: OptConfig,
    tracking: TrackingGains = TrackingGains(),
    reference: Optional[EulerAngles] = None,
) -> Tuple[ProblemSpec, CollocationCost, HromDynamics, DecisionVector]:
    """
    Build the walking-robot problem and its warm start.

    The horizon of the seed becomes the initial final time; the initial
    state is pinned to the seed's first row. Every node wrench must split
    into admissible fan forces (see :func:`fan_inequalities`) and every
    node pitch stays within :func:`pitch_limit`.

    Raises:
        TooShort: If the seed trajectory is too short to resample
    """
    reference = reference or EulerAngles()
    guess = seed_from_simulation(seed, opt.n)

    lower = np.full(CONTROL_DIM, -np.inf)
    upper = np.full(CONTROL_DIM, np.inf)
    lower[:6], upper[:6] = wrench_bounds(robot)
    if not opt.free_joint_inputs:
        lower[JOINT_INPUTS] = upper[JOINT_INPUTS] = 0.0
    state_upper = np.full(STATE_DIM, np.inf)
    state_upper[EULER.start + 1] = pitch_limit(robot)
    fan_matrix, fan_limits = fan_inequalities(robot)

    terminal = np.zeros(STATE_DIM)
    mask = np.zeros(STATE_DIM, dtype=bool)
    if "attitude" in opt.boundary:
        terminal[EULER] = reference.as_array()
        mask[EULER] = True
    if "lateral" in opt.boundary:
        mask[1] = True

    problem = ProblemSpec(
        n=opt.n,
        state_dim=STATE_DIM,
        control_dim=CONTROL_DIM,
        initial_state=guess.states[0] if "initial" in opt.boundary else None,
        terminal_state=terminal if mask.any() else None,
        terminal_mask=mask if mask.any() else None,
        displacement_index=0 if "displacement" in opt.boundary else None,
        forward_velocity=gait.params.forward_velocity_ref,
        control_lower=lower,
        control_upper=upper,
        state_lower=-state_upper,
        state_upper=state_upper,
        control_matrix=fan_matrix,
        control_limits=fan_limits,
        tf_bounds=opt.tf_bounds,
    )
    states = np.clip(guess.states, -state_upper, state_upper)
    controls = np.clip(guess.controls, lower, upper)
    tf = float(np.clip(guess.final_time, *opt.tf_bounds))
    guess = DecisionVector(states, controls, tf)

    weights = CostWeights.diagonal(opt.q_weights, opt.r_weights)
    objective = AttitudeEffortCost(weights, penalty_map(robot, opt.penalize), reference)
    dynamics = HromDynamics(robot, ground, gait, tracking, opt.free_joint_inputs)
    logger.info(f"Walking problem: n={opt.n}, t_f={tf:.3f} s, penalize={opt.penalize}")
    return problem, objective, dynamics, guess


def double_integrator(t: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``x = [position, velocity]``, ``x' = [velocity, u]``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.stack([x[..., 1], u[..., 0]], axis=-1)


def double_integrator_problem(
    n: int = 11,
    final_time: float = 1.0,
    start: Sequence[float] = (0.0, 0.0),
    goal: Sequence[float] = (1.0, 0.0),
) -> Tuple[ProblemSpec, CollocationCost, Dynamics, DecisionVector]:
    """
    Rest-to-rest minimum-effort transfer with fixed final time.

    The warm start moves linearly between the end points with zero control.
    """
    problem = ProblemSpec(
        n=n,
        state_dim=2,
        control_dim=1,
        initial_state=np.asarray(start, dtype=float),
        terminal_state=np.asarray(goal, dtype=float),
        tf_bounds=(final_time, final_time),
    )
    s = np.linspace(0.0, 1.0, n)[:, None]
    states = (1.0 - s) * np.asarray(start, dtype=float) + s * np.asarray(goal, dtype=float)
    guess = DecisionVector(states=states, controls=np.zeros((n, 1)), final_time=final_time)
    return problem, EffortIntegralCost(0), double_integrator, guess
