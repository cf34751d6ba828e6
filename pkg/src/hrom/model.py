"""
Coordinate conventions and kinematics for the reduced-order model.

This module defines the value types that describe the robot state
(body pose, leg joints, velocities), the robot parameter set, and the
rotation, Euler-rate and leg kinematics built on them.

Array conventions:
    Euler angles are stored as ``[yaw, pitch, roll]`` (Z-Y-X intrinsic).
    Leg joints are stored per leg in the order FR, HR, FL, HL, each as
    ``[phi, gamma, length]``.
    The flat state has 36 entries ``[p_B, Phi_B, q_L, pdot_B, omega_B, qdot_L]``.

Every array function broadcasts over leading dimensions so that a batch of
states can be evaluated in a single call.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple, Union

import numpy as np
from typing_extensions import TypeAlias

from .exceptions import Degenerate, NearSingular, Unreachable

ArrayLike: TypeAlias = Union[np.ndarray, Sequence[float]]

LEG_IDS: Tuple[str, ...] = ("FR", "HR", "FL", "HL")
LEG_INDEX: Dict[str, int] = {leg_id: i for i, leg_id in enumerate(LEG_IDS)}
JOINT_NAMES: Tuple[str, ...] = ("phi", "gamma", "length")

STATE_DIM = 36
JOINT_DIM = 12

# Slices into the flat state vector
POSITION = slice(0, 3)
EULER = slice(3, 6)
JOINTS = slice(6, 18)
LINEAR_VELOCITY = slice(18, 21)
ANGULAR_VELOCITY = slice(21, 24)
JOINT_RATES = slice(24, 36)

DEFAULT_EPS_PITCH = 0.1
KGF = 9.80665


def wrap_angle(angle: ArrayLike) -> np.ndarray:
    """Wrap angles into the half-open interval (-pi, pi]."""
    a = np.asarray(angle, dtype=float)
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


def skew(v: ArrayLike) -> np.ndarray:
    """Return the cross-product matrix of ``v`` (shape ``(..., 3, 3)``)."""
    v = np.asarray(v, dtype=float)
    zero = np.zeros_like(v[..., 0])
    return np.stack(
        [
            np.stack([zero, -v[..., 2], v[..., 1]], axis=-1),
            np.stack([v[..., 2], zero, -v[..., 0]], axis=-1),
            np.stack([-v[..., 1], v[..., 0], zero], axis=-1),
        ],
        axis=-2,
    )


def unskew(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`skew` (uses the antisymmetric part)."""
    m = np.asarray(m, dtype=float)
    return 0.5 * np.stack(
        [m[..., 2, 1] - m[..., 1, 2], m[..., 0, 2] - m[..., 2, 0], m[..., 1, 0] - m[..., 0, 1]],
        axis=-1,
    )


@dataclass(frozen=True)
class EulerAngles:
    """
    Z-Y-X Euler angles in radians.

    The body rotation is ``R_z(yaw) @ R_y(pitch) @ R_x(roll)``.
    """

    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self) -> None:
        """Validate angles after initialization."""
        for name in ("yaw", "pitch", "roll"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)):
                raise ValueError(f"{name} must be a real number")
            if not math.isfinite(float(value)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_array(cls, values: ArrayLike) -> "EulerAngles":
        """Create angles from a ``[yaw, pitch, roll]`` array."""
        yaw, pitch, roll = (float(v) for v in np.asarray(values, dtype=float).reshape(3))
        return cls(yaw=yaw, pitch=pitch, roll=roll)

    def as_array(self) -> np.ndarray:
        """Return ``[yaw, pitch, roll]``."""
        return np.array([self.yaw, self.pitch, self.roll], dtype=float)

    def wrapped(self) -> "EulerAngles":
        """Return a copy with every angle wrapped into (-pi, pi]."""
        return EulerAngles.from_array(wrap_angle(self.as_array()))


def _angles(angles: Union[EulerAngles, ArrayLike]) -> np.ndarray:
    if isinstance(angles, EulerAngles):
        return angles.as_array()
    return np.asarray(angles, dtype=float)


def _frozen_array(values: ArrayLike, shape: Tuple[int, ...], name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BodyPose:
    """Body position in the inertial frame and Z-Y-X orientation."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: EulerAngles = field(default_factory=EulerAngles)

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", _frozen_array(self.position, (3,), "position"))
        if not isinstance(self.orientation, EulerAngles):
            raise ValueError("orientation must be EulerAngles")

    @property
    def rotation(self) -> np.ndarray:
        """Rotation matrix from body to inertial frame."""
        return euler_to_rotation(self.orientation)


@dataclass(frozen=True, eq=False)
class BodyVelocity:
    """Inertial linear velocity and body-frame angular velocity."""

    linear: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "linear", _frozen_array(self.linear, (3,), "linear"))
        object.__setattr__(self, "angular", _frozen_array(self.angular, (3,), "angular"))


@dataclass(frozen=True, eq=False)
class LegJoints:
    """
    Joint coordinates and rates of the four massless legs.

    ``positions[i] = [phi, gamma, length]`` and ``rates[i]`` the matching
    time derivatives, for leg ``LEG_IDS[i]``.
    """

    positions: np.ndarray
    rates: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", _frozen_array(self.positions, (4, 3), "positions"))
        object.__setattr__(self, "rates", _frozen_array(self.rates, (4, 3), "rates"))
        if np.any(self.positions[:, 2] <= 0.0):
            raise ValueError("leg lengths must be positive")

    @classmethod
    def uniform(cls, phi: float = 0.0, gamma: float = 0.0, length: float = 0.3) -> "LegJoints":
        """Create a configuration with every leg at the same joint values."""
        return cls(positions=np.tile([phi, gamma, length], (4, 1)))

    def leg(self, leg_id: str) -> np.ndarray:
        """Return ``[phi, gamma, length]`` of one leg."""
        return self.positions[_leg_index(leg_id)]

    def within_limits(self, params: "RobotParams") -> bool:
        """Check every leg length against the robot's limits."""
        lo, hi = params.leg_length_limits
        lengths = self.positions[:, 2]
        return bool(np.all((lengths >= lo) & (lengths <= hi)))


def _leg_index(leg_id: str) -> int:
    try:
        return LEG_INDEX[leg_id]
    except KeyError:
        raise ValueError(f"unknown leg id {leg_id!r}; expected one of {LEG_IDS}") from None


@dataclass(frozen=True, eq=False)
class FullState:
    """
    Complete system state: body pose, legs and body velocities.

    Flattened as ``[p_B(3), Phi_B(3), q_L(12), pdot_B(3), omega_B(3), qdot_L(12)]``.
    """

    pose: BodyPose = field(default_factory=BodyPose)
    legs: LegJoints = field(default_factory=LegJoints.uniform)
    velocity: BodyVelocity = field(default_factory=BodyVelocity)

    def flatten(self) -> np.ndarray:
        """Return the 36-entry state vector."""
        x = np.empty(STATE_DIM)
        x[POSITION] = self.pose.position
        x[EULER] = self.pose.orientation.as_array()
        x[JOINTS] = self.legs.positions.reshape(-1)
        x[LINEAR_VELOCITY] = self.velocity.linear
        x[ANGULAR_VELOCITY] = self.velocity.angular
        x[JOINT_RATES] = self.legs.rates.reshape(-1)
        return x

    @classmethod
    def unflatten(cls, x: ArrayLike) -> "FullState":
        """Rebuild a state from its 36-entry vector."""
        x = np.asarray(x, dtype=float)
        if x.shape != (STATE_DIM,):
            raise ValueError(f"state vector must have shape ({STATE_DIM},), got {x.shape}")
        return cls(
            pose=BodyPose(position=x[POSITION], orientation=EulerAngles.from_array(x[EULER])),
            legs=LegJoints(positions=x[JOINTS].reshape(4, 3), rates=x[JOINT_RATES].reshape(4, 3)),
            velocity=BodyVelocity(linear=x[LINEAR_VELOCITY], angular=x[ANGULAR_VELOCITY]),
        )


def _default_inertia() -> np.ndarray:
    return np.diag([0.1, 0.25, 0.3])


def _default_hips() -> np.ndarray:
    # Placeholder geometry sized from the 1.5 ft body width
    return np.array([[0.15, -0.12, 0.0], [-0.15, -0.12, 0.0], [0.15, 0.12, 0.0], [-0.15, 0.12, 0.0]])


def _default_thrusters() -> np.ndarray:
    return np.array([[0.2, -0.15, 0.0], [-0.2, -0.15, 0.0], [0.2, 0.15, 0.0], [-0.2, 0.15, 0.0]])


@dataclass(frozen=True, eq=False)
class RobotParams:
    """
    Physical parameters of the reduced-order model.

    Mass, inertia and geometry defaults are placeholders; real values are
    supplied through the run configuration.
    """

    mass: float = 10.0
    inertia: np.ndarray = field(default_factory=_default_inertia)
    hip_offsets: np.ndarray = field(default_factory=_default_hips)
    thruster_positions: np.ndarray = field(default_factory=_default_thrusters)
    thruster_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    max_thrust_per_edf: float = 2.0 * KGF
    thrust_budget: float = 8.0 * KGF
    leg_length_limits: Tuple[float, float] = (0.05, 0.5)
    eps_pitch: float = DEFAULT_EPS_PITCH

    def __post_init__(self) -> None:
        """Validate parameters after initialization."""
        if not self.mass > 0.0:
            raise ValueError("mass must be positive")
        inertia = _frozen_array(self.inertia, (3, 3), "inertia")
        if not np.allclose(inertia, inertia.T, atol=1e-12):
            raise ValueError("inertia must be symmetric")
        try:
            np.linalg.cholesky(inertia)
        except np.linalg.LinAlgError as exc:
            raise ValueError("inertia must be positive definite") from exc
        object.__setattr__(self, "inertia", inertia)

        hips = _frozen_array(self.hip_offsets, (4, 3), "hip_offsets")
        mirror = np.array([1.0, -1.0, 1.0])
        fr, hr, fl, hl = (hips[LEG_INDEX[k]] for k in LEG_IDS)
        if not (np.allclose(fl, fr * mirror, atol=1e-12) and np.allclose(hl, hr * mirror, atol=1e-12)):
            raise ValueError("left and right hip offsets must mirror about the body x-z plane")
        object.__setattr__(self, "hip_offsets", hips)

        object.__setattr__(
            self, "thruster_positions", _frozen_array(self.thruster_positions, (4, 3), "thruster_positions")
        )
        axis = _frozen_array(self.thruster_axis, (3,), "thruster_axis")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ValueError("thruster_axis must be a unit vector")
        object.__setattr__(self, "thruster_axis", axis)
        object.__setattr__(self, "gravity", _frozen_array(self.gravity, (3,), "gravity"))

        if not self.max_thrust_per_edf > 0.0:
            raise ValueError("max_thrust_per_edf must be positive")
        if not self.thrust_budget > 0.0:
            raise ValueError("thrust_budget must be positive")
        lo, hi = self.leg_length_limits
        if not 0.0 < lo < hi:
            raise ValueError("leg_length_limits must satisfy 0 < min < max")
        object.__setattr__(self, "leg_length_limits", (float(lo), float(hi)))
        if not 0.0 < self.eps_pitch < 1.0:
            raise ValueError("eps_pitch must lie in (0, 1)")

    @property
    def weight(self) -> float:
        """Magnitude of the gravitational force on the body."""
        return float(self.mass * np.linalg.norm(self.gravity))

    @property
    def mass_matrix(self) -> np.ndarray:
        """Constant 6x6 generalized mass-inertia matrix ``D``."""
        d = np.zeros((6, 6))
        d[:3, :3] = self.mass * np.eye(3)
        d[3:, 3:] = self.inertia
        return d


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------


def euler_to_rotation(angles: Union[EulerAngles, ArrayLike]) -> np.ndarray:
    """
    Build ``R = R_z(yaw) R_y(pitch) R_x(roll)``.

    Args:
        angles: EulerAngles or array ``(..., 3)`` of ``[yaw, pitch, roll]``

    Returns:
        Rotation matrices of shape ``(..., 3, 3)``
    """
    a = _angles(angles)
    cy, sy = np.cos(a[..., 0]), np.sin(a[..., 0])
    cp, sp = np.cos(a[..., 1]), np.sin(a[..., 1])
    cr, sr = np.cos(a[..., 2]), np.sin(a[..., 2])
    return np.stack(
        [
            np.stack([cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr], axis=-1),
            np.stack([sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr], axis=-1),
            np.stack([-sp, cp * sr, cp * cr], axis=-1),
        ],
        axis=-2,
    )


def rotation_to_euler(rotation: np.ndarray) -> np.ndarray:
    """Extract ``[yaw, pitch, roll]`` from rotation matrices ``(..., 3, 3)``."""
    r = np.asarray(rotation, dtype=float)
    pitch = np.arcsin(np.clip(-r[..., 2, 0], -1.0, 1.0))
    yaw = np.arctan2(r[..., 1, 0], r[..., 0, 0])
    roll = np.arctan2(r[..., 2, 1], r[..., 2, 2])
    return wrap_angle(np.stack([yaw, pitch, roll], axis=-1))


def euler_rate_matrix(angles: Union[EulerAngles, ArrayLike]) -> np.ndarray:
    """
    Map Euler-angle rates to body-frame angular velocity.

    ``omega_B = E @ [yaw_dot, pitch_dot, roll_dot]``. ``det(E) = -cos(pitch)``,
    so the map loses rank at pitch = +/- pi/2.
    """
    a = _angles(angles)
    cp, sp = np.cos(a[..., 1]), np.sin(a[..., 1])
    cr, sr = np.cos(a[..., 2]), np.sin(a[..., 2])
    zero = np.zeros_like(cp)
    one = np.ones_like(cp)
    return np.stack(
        [
            np.stack([-sp, zero, one], axis=-1),
            np.stack([sr * cp, cr, zero], axis=-1),
            np.stack([cr * cp, -sr, zero], axis=-1),
        ],
        axis=-2,
    )


def euler_rates(
    angles: Union[EulerAngles, ArrayLike],
    omega: ArrayLike,
    eps_pitch: float = DEFAULT_EPS_PITCH,
) -> np.ndarray:
    """
    Solve ``E @ Phi_dot = omega`` for the Euler-angle rates.

    Raises:
        NearSingular: If ``|cos(pitch)| < eps_pitch`` for any sample
    """
    a = _angles(angles)
    w = np.asarray(omega, dtype=float)
    cp, sp = np.cos(a[..., 1]), np.sin(a[..., 1])
    bad = np.abs(cp) < eps_pitch
    if np.any(bad):
        pitch = float(np.asarray(a[..., 1])[bad].flat[0])
        raise NearSingular("Euler-rate matrix is near singular", pitch=pitch)
    cr, sr = np.cos(a[..., 2]), np.sin(a[..., 2])
    yaw_dot = (sr * w[..., 1] + cr * w[..., 2]) / cp
    pitch_dot = cr * w[..., 1] - sr * w[..., 2]
    roll_dot = w[..., 0] + sp * yaw_dot
    return np.stack([yaw_dot, pitch_dot, roll_dot], axis=-1)


# ---------------------------------------------------------------------------
# Leg kinematics
# ---------------------------------------------------------------------------


def leg_vector(joints: ArrayLike) -> np.ndarray:
    """
    Hip-to-foot vector in the body frame, ``R_y(phi) R_x(gamma) [0, 0, -l]``.

    Args:
        joints: Array ``(..., 3)`` of ``[phi, gamma, length]``
    """
    q = np.asarray(joints, dtype=float)
    cphi, sphi = np.cos(q[..., 0]), np.sin(q[..., 0])
    cg, sg = np.cos(q[..., 1]), np.sin(q[..., 1])
    length = q[..., 2]
    return np.stack([-length * cg * sphi, length * sg, -length * cg * cphi], axis=-1)


def leg_vector_jacobian(joints: ArrayLike) -> np.ndarray:
    """Partial derivatives of :func:`leg_vector`; columns are d/dphi, d/dgamma, d/dl."""
    q = np.asarray(joints, dtype=float)
    cphi, sphi = np.cos(q[..., 0]), np.sin(q[..., 0])
    cg, sg = np.cos(q[..., 1]), np.sin(q[..., 1])
    length = q[..., 2]
    zero = np.zeros_like(length)
    d_phi = np.stack([-length * cg * cphi, zero, length * cg * sphi], axis=-1)
    d_gamma = np.stack([length * sg * sphi, length * cg, length * sg * cphi], axis=-1)
    d_length = np.stack([-cg * sphi, sg, -cg * cphi], axis=-1)
    return np.stack([d_phi, d_gamma, d_length], axis=-1)


def _split(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    rotation = euler_to_rotation(x[..., EULER])
    joints = x[..., JOINTS].reshape(x.shape[:-1] + (4, 3))
    return x, rotation, joints


def foot_positions(x: ArrayLike, params: RobotParams) -> np.ndarray:
    """
    World-frame positions of all four feet.

    Args:
        x: Flat states ``(..., 36)``
        params: Robot parameters

    Returns:
        Array ``(..., 4, 3)`` in LEG_IDS order
    """
    x, rotation, joints = _split(x)
    r_body = params.hip_offsets + leg_vector(joints)
    return x[..., None, POSITION] + np.einsum("...ij,...kj->...ki", rotation, r_body)


def foot_velocities(x: ArrayLike, params: RobotParams) -> np.ndarray:
    """
    World-frame velocities of all four feet, including the joint-rate terms.

    ``pdot_f = pdot_B + R (omega x r) + R (d l_f / d q) qdot``.
    """
    x, rotation, joints = _split(x)
    rates = x[..., JOINT_RATES].reshape(x.shape[:-1] + (4, 3))
    r_body = params.hip_offsets + leg_vector(joints)
    omega = x[..., None, ANGULAR_VELOCITY]
    local = np.cross(omega, r_body) + np.einsum("...kij,...kj->...ki", leg_vector_jacobian(joints), rates)
    return x[..., None, LINEAR_VELOCITY] + np.einsum("...ij,...kj->...ki", rotation, local)


def foot_jacobians(x: ArrayLike, params: RobotParams) -> np.ndarray:
    """
    Foot-velocity Jacobians ``B_gi = d pdot_f / d v`` for all legs.

    Returns:
        Array ``(..., 4, 3, 6)``; columns 0-2 identity, 3-5 ``-R skew(r)``
    """
    x, rotation, joints = _split(x)
    r_body = params.hip_offsets + leg_vector(joints)
    angular = -np.einsum("...ij,...kjl->...kil", rotation, skew(r_body))
    eye = np.broadcast_to(np.eye(3), angular.shape)
    return np.concatenate([eye, angular], axis=-1)


def foot_position_world(pose: BodyPose, params: RobotParams, leg: LegJoints, leg_id: str) -> np.ndarray:
    """
    Forward kinematics of one foot.

    Returns ``p_B + R_B l_hi + R_B R_y(phi) R_x(gamma) [0, 0, -l]``.
    """
    i = _leg_index(leg_id)
    rotation = pose.rotation
    return pose.position + rotation @ (params.hip_offsets[i] + leg_vector(leg.positions[i]))


def foot_jacobian(pose: BodyPose, params: RobotParams, leg: LegJoints, leg_id: str) -> np.ndarray:
    """Return the 3x6 map from ``v = [pdot_B, omega_B]`` to the foot velocity."""
    i = _leg_index(leg_id)
    rotation = pose.rotation
    r_body = params.hip_offsets[i] + leg_vector(leg.positions[i])
    return np.hstack([np.eye(3), -rotation @ skew(r_body)])


def leg_inverse_kinematics(
    target_rel_hip: ArrayLike,
    length_limits: Tuple[float, float] = (0.05, 0.5),
) -> np.ndarray:
    """
    Invert the leg map for a body-frame foot target relative to the hip.

    The branch with the foot below the hip is chosen:
    ``gamma = atan2(y, hypot(x, z))`` and ``phi = atan2(-x, -z)``.

    Args:
        target_rel_hip: Array ``(..., 3)`` of foot targets in meters
        length_limits: ``(l_min, l_max)``

    Returns:
        Array ``(..., 3)`` of ``[phi, gamma, length]``

    Raises:
        Degenerate: If a target is closer than 1e-9 m to the hip
        Unreachable: If a target distance lies outside the length limits
    """
    p = np.asarray(target_rel_hip, dtype=float)
    length = np.linalg.norm(p, axis=-1)
    if np.any(length < 1e-9):
        raise Degenerate("foot target coincides with the hip")
    lo, hi = length_limits
    if np.any((length < lo) | (length > hi)):
        worst = float(np.asarray(length)[(length < lo) | (length > hi)].flat[0])
        raise Unreachable(f"foot target at {worst:.6f} m outside leg limits [{lo}, {hi}]")
    sagittal = np.hypot(p[..., 0], p[..., 2])
    gamma = np.arctan2(p[..., 1], sagittal)
    phi = np.where(sagittal < 1e-12, 0.0, np.arctan2(-p[..., 0], -p[..., 2]))
    phi = np.where(phi <= -np.pi, np.pi, phi)
    return np.stack([phi, gamma, length], axis=-1)


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------


def kinetic_energy(x: ArrayLike, params: RobotParams) -> np.ndarray:
    """``1/2 m |pdot|^2 + 1/2 omega^T I omega`` (legs are massless)."""
    x = np.asarray(x, dtype=float)
    v = x[..., LINEAR_VELOCITY]
    w = x[..., ANGULAR_VELOCITY]
    return 0.5 * params.mass * np.sum(v * v, axis=-1) + 0.5 * np.einsum("...i,ij,...j->...", w, params.inertia, w)


def potential_energy(x: ArrayLike, params: RobotParams) -> np.ndarray:
    """``-m p^T g``."""
    x = np.asarray(x, dtype=float)
    return -params.mass * x[..., POSITION] @ params.gravity


def default_state(height: float = 0.3, leg_length: float = 0.3) -> FullState:
    """Level body at ``height`` with every leg straight down at ``leg_length``."""
    return FullState(
        pose=BodyPose(position=np.array([0.0, 0.0, height])),
        legs=LegJoints.uniform(length=leg_length),
    )
