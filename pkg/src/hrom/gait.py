"""
Heuristic gait generation.

Feet follow degree-6 Bezier curves (seven control points) expressed in the
body frame relative to each hip. Diagonal pairs alternate: while one pair
swings forward the other strokes backward at the reference speed, then all
four feet hold for a short pause. An opening transient draws every foot
from below its hip toward the centreline so the robot can walk on a narrow
path.

Timeline::

    [0, transient)           PAUSE for all legs, feet drawn inward
    half-cycle k, step part  pair A swings (k even) or pair B swings (k odd)
    half-cycle k, pause part PAUSE for all legs, references held

Control-point layout (fractions applied per axis):

    x: start + x_profile[k] * (end - start)
    y: stance_y + side * bow * y_profile[k]      (side = +1 left, -1 right)
    z: -stand_length + step_height * z_profile[k]

The default y and z profiles are scaled so the curve reaches exactly
``bow`` and ``step_height`` at mid-swing.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import Infeasible, OutOfRange, Unreachable
from .model import JOINT_DIM, LEG_IDS, ArrayLike, RobotParams, leg_inverse_kinematics, leg_vector_jacobian

logger = logging.getLogger(__name__)

BEZIER_POINTS = 7
PAIR_A: Tuple[str, str] = ("FR", "HL")
PAIR_B: Tuple[str, str] = ("FL", "HR")

_BINOMIAL_6 = np.array([math.comb(6, k) for k in range(7)], dtype=float)
_BINOMIAL_5 = np.array([math.comb(5, k) for k in range(6)], dtype=float)

DEFAULT_X_PROFILE: Tuple[float, ...] = (0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0)
DEFAULT_LIFT_PROFILE: Tuple[float, ...] = (0.0, 0.0, 1.28, 1.28, 1.28, 0.0, 0.0)
FD_STEP = 1e-4


class Phase(Enum):
    """Gait phase of a single leg."""
    STANCE = "stance"   # foot loaded, stroking backward
    SWING = "swing"     # foot in the air
    PAUSE = "pause"     # four-point support, no propulsion


@dataclass(frozen=True)
class GaitParams:
    """
    User inputs of the gait generator.

    ``step_length`` is the stroke of one stance phase and must equal
    ``forward_velocity_ref * step_time``; it is derived when omitted.
    Step time, pause and height defaults are tunable placeholders.
    """

    forward_velocity_ref: float = 0.1
    step_time: float = 0.4
    pause_time: float = 0.05
    step_height: float = 0.05
    stance_y_offset: float = 0.04
    duration: float = 3.5
    step_length: Optional[float] = None
    transient_time: float = 0.25
    swing_bow: Optional[float] = None
    stand_length: float = 0.3
    x_profile: Tuple[float, ...] = DEFAULT_X_PROFILE
    y_profile: Tuple[float, ...] = DEFAULT_LIFT_PROFILE
    z_profile: Tuple[float, ...] = DEFAULT_LIFT_PROFILE

    def __post_init__(self) -> None:
        """Validate gait inputs after initialization."""
        if not self.step_time > 0.0:
            raise ValueError("step_time must be positive")
        if not self.pause_time >= 0.0:
            raise ValueError("pause_time must be non-negative")
        if not self.step_height > 0.0:
            raise ValueError("step_height must be positive")
        if not self.duration > 0.0:
            raise ValueError("duration must be positive")
        if not self.transient_time >= 0.0:
            raise ValueError("transient_time must be non-negative")
        if not self.forward_velocity_ref >= 0.0:
            raise ValueError("forward_velocity_ref must be non-negative")
        if not self.stance_y_offset >= 0.0:
            raise ValueError("stance_y_offset must be non-negative")
        if not self.stand_length > 0.0:
            raise ValueError("stand_length must be positive")
        if self.swing_bow is not None and not self.swing_bow > 0.0:
            raise ValueError("swing_bow must be positive")
        for name in ("x_profile", "y_profile", "z_profile"):
            profile = tuple(float(v) for v in getattr(self, name))
            if len(profile) != BEZIER_POINTS:
                raise ValueError(f"{name} must have {BEZIER_POINTS} entries")
            object.__setattr__(self, name, profile)

        expected = self.forward_velocity_ref * self.step_time
        if self.step_length is None:
            object.__setattr__(self, "step_length", expected)
        elif abs(self.step_length - expected) > 1e-9:
            raise ValueError(
                f"step_length {self.step_length} inconsistent with "
                f"forward_velocity_ref * step_time = {expected}"
            )

    @property
    def half_cycle(self) -> float:
        """Duration of one step plus its pause."""
        return self.step_time + self.pause_time

    @property
    def bow(self) -> float:
        """Outward swing clearance in meters."""
        if self.swing_bow is not None:
            return self.swing_bow
        return max(self.stance_y_offset, 0.02)


@dataclass(frozen=True, eq=False)
class BezierCurve:
    """Degree-6 Bezier curve defined by seven control points in R^3."""

    control_points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.control_points, dtype=float)
        if pts.shape != (BEZIER_POINTS, 3):
            raise ValueError(f"control_points must have shape ({BEZIER_POINTS}, 3), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "control_points", pts)

    @property
    def start(self) -> np.ndarray:
        return self.control_points[0]

    @property
    def end(self) -> np.ndarray:
        return self.control_points[-1]


def bezier_eval(curve: BezierCurve, s: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate a Bezier curve and its derivative with respect to ``s``.

    Raises:
        OutOfRange: If ``s`` lies outside [0, 1]
    """
    if not 0.0 <= s <= 1.0:
        raise OutOfRange(f"curve parameter {s} outside [0, 1]")
    pts = curve.control_points
    k6 = np.arange(7)
    basis = _BINOMIAL_6 * s ** k6 * (1.0 - s) ** (6 - k6)
    k5 = np.arange(6)
    dbasis = _BINOMIAL_5 * s ** k5 * (1.0 - s) ** (5 - k5)
    return basis @ pts, 6.0 * (dbasis @ np.diff(pts, axis=0))


@dataclass(frozen=True)
class ContactSchedule:
    """
    Diagonal-pair phase schedule.

    FR/HL share a phase and FL/HR take the opposite one; pair A (FR, HL)
    swings first.
    """

    step_time: float
    pause_time: float
    transient_time: float
    duration: float

    def segment(self, t: float) -> Tuple[str, int, float, float]:
        """
        Locate ``t`` in the timeline.

        Returns:
            Tuple ``(kind, k, t_start, length)`` where kind is
            ``"transient"``, ``"step"`` or ``"pause"`` and ``k`` the
            half-cycle index (-1 during the transient)
        """
        if t < self.transient_time:
            return "transient", -1, 0.0, self.transient_time
        half = self.step_time + self.pause_time
        k = int(math.floor((t - self.transient_time) / half))
        start = self.transient_time + k * half
        if t - start < self.step_time:
            return "step", k, start, self.step_time
        return "pause", k, start + self.step_time, self.pause_time

    def swing_pair(self, k: int) -> Tuple[str, str]:
        """Pair swinging during half-cycle ``k``."""
        return PAIR_A if k % 2 == 0 else PAIR_B

    def phase(self, leg_id: str, t: float) -> Phase:
        """Phase of ``leg_id`` at time ``t``."""
        kind, k, _, _ = self.segment(t)
        if kind != "step":
            return Phase.PAUSE
        return Phase.SWING if leg_id in self.swing_pair(k) else Phase.STANCE

    def phases(self, t: float) -> Dict[str, Phase]:
        """Phases of every leg at time ``t``."""
        return {leg_id: self.phase(leg_id, t) for leg_id in LEG_IDS}


@dataclass(frozen=True, eq=False)
class LegCurves:
    """Curves used by one leg, all relative to its hip in the body frame."""

    transient: BezierCurve
    first: BezierCurve
    swing: BezierCurve
    stance: BezierCurve


@dataclass(frozen=True, eq=False)
class GaitPlan:
    """Immutable gait: per-leg curves plus the contact schedule."""

    params: GaitParams
    curves: Dict[str, LegCurves]
    schedule: ContactSchedule
    length_limits: Tuple[float, float]

    def curve_at(self, leg_id: str, t: float) -> Tuple[BezierCurve, float, float, bool]:
        """
        Active curve for ``leg_id`` at ``t``.

        Returns:
            Tuple ``(curve, t_start, length, moving)``; a held reference has
            ``moving`` False and evaluates the curve end point
        """
        kind, k, start, length = self.schedule.segment(t)
        curves = self.curves[leg_id]
        if kind == "transient":
            return curves.transient, start, length, True
        if kind == "pause":
            # Hold the reference reached at the end of the preceding step
            step_start = start - self.params.step_time
            curve, _, _, _ = self.curve_at(leg_id, step_start)
            return curve, start, length, False
        swinging = leg_id in self.schedule.swing_pair(k)
        if k == 0:
            return curves.first, start, length, True
        return (curves.swing if swinging else curves.stance), start, length, True

    def phase(self, leg_id: str, t: float) -> Phase:
        """Phase of ``leg_id`` at time ``t``."""
        return self.schedule.phase(leg_id, t)

    def advance_target(self) -> float:
        """Net body advance implied by the stance strokes within the duration."""
        p = self.params
        walking = p.duration - p.transient_time
        if walking <= 0.0 or p.step_length == 0.0:
            return 0.0
        total = 0.0
        k = 0
        while k * p.half_cycle < walking:
            elapsed = min(walking - k * p.half_cycle, p.step_time) / p.step_time
            stroke = 0.5 * p.step_length if k == 0 else p.step_length
            total += elapsed * stroke
            k += 1
        return total


def _curve(start: ArrayLike, end: ArrayLike, params: GaitParams, side: float, lift: bool) -> BezierCurve:
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    xp = np.asarray(params.x_profile)
    pts = start + xp[:, None] * (end - start)
    if lift:
        pts[:, 1] += side * params.bow * np.asarray(params.y_profile)
        pts[:, 2] += params.step_height * np.asarray(params.z_profile)
    return BezierCurve(pts)


def _line(start: ArrayLike, end: ArrayLike) -> BezierCurve:
    fractions = np.linspace(0.0, 1.0, BEZIER_POINTS)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    return BezierCurve(start + fractions[:, None] * (end - start))


def build_gait(params: GaitParams, robot: RobotParams) -> GaitPlan:
    """
    Generate the per-leg Bezier curves and the diagonal-pair schedule.

    Raises:
        Infeasible: If any sampled foot target leaves the reachable set
    """
    half = 0.5 * params.step_length
    curves: Dict[str, LegCurves] = {}
    for i, leg_id in enumerate(LEG_IDS):
        side = 1.0 if robot.hip_offsets[i, 1] > 0.0 else -1.0
        neutral = np.array([0.0, 0.0, -params.stand_length])
        narrow = neutral + np.array([0.0, -side * params.stance_y_offset, 0.0])
        front = narrow + np.array([half, 0.0, 0.0])
        back = narrow - np.array([half, 0.0, 0.0])

        if leg_id in PAIR_A:
            first = _curve(narrow, front, params, side, lift=True)
        else:
            first = _line(narrow, back)
        curves[leg_id] = LegCurves(
            transient=_curve(neutral, narrow, params, side, lift=False),
            first=first,
            swing=_curve(back, front, params, side, lift=True),
            stance=_line(front, back),
        )

    plan = GaitPlan(
        params=params,
        curves=curves,
        schedule=ContactSchedule(
            step_time=params.step_time,
            pause_time=params.pause_time,
            transient_time=params.transient_time,
            duration=params.duration,
        ),
        length_limits=robot.leg_length_limits,
    )
    _check_reachable(plan)
    logger.debug(
        f"Gait built: v_ref={params.forward_velocity_ref} m/s, step={params.step_length:.4f} m, "
        f"advance target={plan.advance_target():.3f} m"
    )
    return plan


def _check_reachable(plan: GaitPlan) -> None:
    s = np.linspace(0.0, 1.0, 41)
    for leg_id, curves in plan.curves.items():
        for name in ("transient", "first", "swing", "stance"):
            curve = getattr(curves, name)
            targets = np.array([bezier_eval(curve, float(si))[0] for si in s])
            try:
                leg_inverse_kinematics(targets, plan.length_limits)
            except Unreachable as exc:
                raise Infeasible(f"{name} curve of leg {leg_id} leaves the reachable set", cause=exc) from exc


@dataclass(frozen=True, eq=False)
class JointReference:
    """Desired joint positions, rates and accelerations (12 entries each)."""

    positions: np.ndarray
    rates: np.ndarray
    accels: np.ndarray


def _leg_state(curve: BezierCurve, s: float, ds_dt: float, limits: Tuple[float, float]) -> Tuple[np.ndarray, np.ndarray]:
    pos, dpos = bezier_eval(curve, min(max(s, 0.0), 1.0))
    q = leg_inverse_kinematics(pos, limits)
    if ds_dt == 0.0:
        return q, np.zeros(3)
    qdot = np.linalg.solve(leg_vector_jacobian(q), dpos * ds_dt)
    return q, qdot


def joint_reference(t: float, gait: GaitPlan, robot: Optional[RobotParams] = None) -> JointReference:
    """
    Desired leg joint states at time ``t``.

    Positions come from inverse kinematics of the active curve, rates from
    the chain rule through the curve derivative, and accelerations from a
    symmetric finite difference of the rates (step 1e-4 s) clipped to the
    active phase so the stencil never straddles a phase switch.

    Raises:
        OutOfRange: If ``t`` lies outside [0, duration]
        Unreachable: If a target leaves the leg-length limits
    """
    duration = gait.params.duration
    if not 0.0 <= t <= duration + 1e-12:
        raise OutOfRange(f"time {t} outside [0, {duration}]")
    limits = robot.leg_length_limits if robot is not None else gait.length_limits

    positions: List[np.ndarray] = []
    rates: List[np.ndarray] = []
    accels: List[np.ndarray] = []
    for leg_id in LEG_IDS:
        curve, start, length, moving = gait.curve_at(leg_id, t)
        if not moving or length <= 0.0:
            q, _ = _leg_state(curve, 1.0, 0.0, limits)
            positions.append(q)
            rates.append(np.zeros(3))
            accels.append(np.zeros(3))
            continue
        ds_dt = 1.0 / length
        q, qdot = _leg_state(curve, (t - start) / length, ds_dt, limits)
        lo = max(t - FD_STEP, start)
        hi = min(t + FD_STEP, start + length)
        _, qdot_lo = _leg_state(curve, (lo - start) / length, ds_dt, limits)
        _, qdot_hi = _leg_state(curve, (hi - start) / length, ds_dt, limits)
        positions.append(q)
        rates.append(qdot)
        accels.append((qdot_hi - qdot_lo) / (hi - lo))

    return JointReference(
        positions=np.concatenate(positions),
        rates=np.concatenate(rates),
        accels=np.concatenate(accels),
    )


@dataclass(frozen=True)
class TrackingGains:
    """Diagonal joint-space PD gains (scalars applied to all 12 joints)."""

    kp: float = 400.0
    kd: float = 40.0

    def __post_init__(self) -> None:
        if not self.kp >= 0.0 or not self.kd >= 0.0:
            raise ValueError("tracking gains must be non-negative")


def joint_tracking(
    q: ArrayLike,
    qdot: ArrayLike,
    reference: JointReference,
    gains: TrackingGains = TrackingGains(),
) -> np.ndarray:
    """
    Joint acceleration command ``u_L = qddot* + Kp (q* - q) + Kd (qdot* - qdot)``.
    """
    q = np.asarray(q, dtype=float).reshape(JOINT_DIM)
    qdot = np.asarray(qdot, dtype=float).reshape(JOINT_DIM)
    return reference.accels + gains.kp * (reference.positions - q) + gains.kd * (reference.rates - qdot)


def sample_times(duration: float, dt: float) -> np.ndarray:
    """Uniform sample times covering [0, duration] inclusive."""
    steps = int(round(duration / dt))
    return np.arange(steps + 1) * dt


def foot_targets(t: float, gait: GaitPlan) -> np.ndarray:
    """Hip-relative body-frame foot targets ``(4, 3)`` at time ``t``."""
    out = np.empty((len(LEG_IDS), 3))
    for i, leg_id in enumerate(LEG_IDS):
        curve, start, length, moving = gait.curve_at(leg_id, t)
        s = (t - start) / length if moving and length > 0.0 else 1.0
        out[i] = bezier_eval(curve, min(max(s, 0.0), 1.0))[0]
    return out


def stance_pairs(schedule: ContactSchedule, times: Sequence[float]) -> List[Tuple[str, ...]]:
    """Legs in STANCE at each sample time (empty tuple during pauses)."""
    return [tuple(leg for leg in LEG_IDS if schedule.phase(leg, float(t)) is Phase.STANCE) for t in times]
