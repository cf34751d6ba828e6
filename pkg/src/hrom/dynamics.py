"""
Equations of motion of the reduced-order model.

The body obeys ``D v_dot + C(v) v + G = sum_i B_gi^T u_gi + u_t`` with
``v = [pdot_B (inertial), omega_B (body)]``; the massless legs are driven
directly through their joint accelerations ``qddot_L = u_L``.

The thrust wrench is condensed from four fixed electric ducted fans. Its
force part is specified in the body frame and rotated into the inertial
frame before use; its moment part stays in the body frame.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .contact import GroundForce, GroundParams, ground_forces
from .exceptions import BoundsViolation
from .model import (
    ANGULAR_VELOCITY,
    EULER,
    JOINT_DIM,
    JOINT_RATES,
    LEG_IDS,
    LINEAR_VELOCITY,
    STATE_DIM,
    ArrayLike,
    FullState,
    RobotParams,
    euler_rates,
    euler_to_rotation,
    foot_jacobians,
    foot_positions,
    foot_velocities,
)

logger = logging.getLogger(__name__)

CONTROL_DIM = 18

# Slices into the flat control vector
FORCE = slice(0, 3)
MOMENT = slice(3, 6)
WRENCH = slice(0, 6)
JOINT_INPUTS = slice(6, 18)


@dataclass(frozen=True, eq=False)
class Wrench:
    """Force (N) and moment (N*m) acting at the body COM, body frame."""

    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        for name in ("force", "moment"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (3,):
                raise ValueError(f"{name} must have shape (3,)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "Wrench":
        """Create a wrench from ``[fx, fy, fz, mx, my, mz]``."""
        w = np.asarray(values, dtype=float).reshape(6)
        return cls(force=w[:3], moment=w[3:])

    def as_array(self) -> np.ndarray:
        """Return ``[fx, fy, fz, mx, my, mz]``."""
        return np.concatenate([self.force, self.moment])


@dataclass(frozen=True, eq=False)
class ThrusterForces:
    """
    Scalar thrust of each fan in LEG_IDS order.

    ``saturated`` is set by :func:`wrench_allocation` when clamping changed
    the least-squares solution.
    """

    forces: np.ndarray = field(default_factory=lambda: np.zeros(4))
    saturated: bool = False

    def __post_init__(self) -> None:
        arr = np.array(self.forces, dtype=float)
        if arr.shape != (4,):
            raise ValueError("forces must have shape (4,)")
        if not np.all(np.isfinite(arr)):
            raise ValueError("forces must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "forces", arr)

    @property
    def total(self) -> float:
        """Sum of the four fan forces."""
        return float(np.sum(self.forces))

    def within_bounds(self, params: RobotParams, tol: float = 0.0) -> bool:
        """Check per-fan limits and the total thrust budget."""
        f = self.forces
        return bool(
            np.all(f >= -tol) and np.all(f <= params.max_thrust_per_edf + tol) and f.sum() <= params.thrust_budget + tol
        )


@dataclass(frozen=True, eq=False)
class ControlInput:
    """Thrust wrench ``u_t`` and leg joint accelerations ``u_L`` (18 entries flat)."""

    wrench: Wrench = field(default_factory=Wrench)
    joint_accels: np.ndarray = field(default_factory=lambda: np.zeros(JOINT_DIM))

    def __post_init__(self) -> None:
        arr = np.array(self.joint_accels, dtype=float).reshape(-1)
        if arr.shape != (JOINT_DIM,):
            raise ValueError(f"joint_accels must have {JOINT_DIM} entries")
        arr.setflags(write=False)
        object.__setattr__(self, "joint_accels", arr)

    def flatten(self) -> np.ndarray:
        """Return ``[f, m, u_L]``."""
        return np.concatenate([self.wrench.as_array(), self.joint_accels])

    @classmethod
    def unflatten(cls, u: ArrayLike) -> "ControlInput":
        """Rebuild an input from its 18-entry vector."""
        u = np.asarray(u, dtype=float)
        if u.shape != (CONTROL_DIM,):
            raise ValueError(f"control vector must have shape ({CONTROL_DIM},), got {u.shape}")
        return cls(wrench=Wrench.from_array(u[WRENCH]), joint_accels=u[JOINT_INPUTS])


StateLike = Union[FullState, ArrayLike]
InputLike = Union[ControlInput, ArrayLike]


def _state_array(state: StateLike) -> np.ndarray:
    if isinstance(state, FullState):
        return state.flatten()
    return np.asarray(state, dtype=float)


def _input_array(control: InputLike) -> np.ndarray:
    if isinstance(control, ControlInput):
        return control.flatten()
    return np.asarray(control, dtype=float)


# ---------------------------------------------------------------------------
# Manipulator form
# ---------------------------------------------------------------------------


def generalized_matrices(state: StateLike, params: RobotParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Terms of ``D v_dot + C v + G``.

    Returns:
        Tuple ``(D, Cv, G)`` with ``D = blockdiag(m I3, I_B)``,
        ``Cv = [0; omega x I_B omega]`` and ``G = [-m g; 0]``
    """
    x = _state_array(state)
    omega = x[..., ANGULAR_VELOCITY]
    gyro = np.cross(omega, omega @ params.inertia.T)
    cv = np.concatenate([np.zeros_like(gyro), gyro], axis=-1)
    g = np.concatenate([-params.mass * params.gravity, np.zeros(3)])
    return params.mass_matrix, cv, np.broadcast_to(g, cv.shape).copy()


@lru_cache(maxsize=16)
def _mass_factor(params: RobotParams) -> Tuple[np.ndarray, bool]:
    return cho_factor(params.mass_matrix)


def _solve_mass(params: RobotParams, rhs: np.ndarray) -> np.ndarray:
    flat = rhs.reshape(-1, 6).T
    return cho_solve(_mass_factor(params), flat).T.reshape(rhs.shape)


# ---------------------------------------------------------------------------
# Thrusters
# ---------------------------------------------------------------------------


def thruster_allocation_matrix(params: RobotParams) -> np.ndarray:
    """6x4 map from fan forces to the body-frame wrench; column i is ``[a; p_i x a]``."""
    axis = params.thruster_axis
    moments = np.cross(params.thruster_positions, axis)
    return np.vstack([np.tile(axis[:, None], (1, 4)), moments.T])


def thruster_wrench(forces: ThrusterForces, params: RobotParams) -> Wrench:
    """
    Condense the four fan forces into a COM wrench.

    Raises:
        BoundsViolation: If any force is negative, exceeds the per-fan
            limit, or the total exceeds the thrust budget
    """
    f = forces.forces
    if np.any(f < 0.0) or np.any(f > params.max_thrust_per_edf):
        raise BoundsViolation(f"fan forces {f.tolist()} outside [0, {params.max_thrust_per_edf}] N")
    if f.sum() > params.thrust_budget:
        raise BoundsViolation(f"total thrust {f.sum():.3f} N exceeds budget {params.thrust_budget:.3f} N")
    return Wrench.from_array(thruster_allocation_matrix(params) @ f)


def wrench_allocation(desired: Wrench, params: RobotParams, clamp: bool = True) -> ThrusterForces:
    """
    Least-squares fan forces for a desired wrench.

    The pseudo-inverse of the allocation matrix solves for the achievable
    components only (with a single fan axis these are the axial force and
    the two moments perpendicular to it). The result is clamped to
    ``[0, max_thrust_per_edf]`` and scaled into the thrust budget.

    Args:
        desired: Requested body-frame wrench
        params: Robot parameters
        clamp: Apply the actuator limits

    Returns:
        ThrusterForces with ``saturated`` set when clamping was active
    """
    raw = np.linalg.pinv(thruster_allocation_matrix(params)) @ desired.as_array()
    if not clamp:
        return ThrusterForces(forces=raw)
    forces = np.clip(raw, 0.0, params.max_thrust_per_edf)
    total = forces.sum()
    if total > params.thrust_budget:
        forces = forces * (params.thrust_budget / total)
    saturated = bool(np.max(np.abs(forces - raw)) > 1e-12)
    if saturated:
        logger.debug(f"Thruster allocation saturated: requested {raw.round(4).tolist()} N")
    return ThrusterForces(forces=forces, saturated=saturated)


# ---------------------------------------------------------------------------
# State derivative
# ---------------------------------------------------------------------------


def contact_force_array(x: ArrayLike, params: RobotParams, ground: GroundParams) -> Tuple[np.ndarray, np.ndarray]:
    """Ground reaction forces ``(..., 4, 3)`` and contact flags ``(..., 4)`` for flat states."""
    x = np.asarray(x, dtype=float)
    return ground_forces(foot_positions(x, params), foot_velocities(x, params), ground)


def contact_forces(state: StateLike, params: RobotParams, ground: GroundParams) -> List[GroundForce]:
    """Per-leg ground reaction forces in LEG_IDS order."""
    forces, flags = contact_force_array(_state_array(state), params, ground)
    return [GroundForce(force=forces[i], in_contact=bool(flags[i])) for i in range(len(LEG_IDS))]


def generalized_forces(x: ArrayLike, u: ArrayLike, params: RobotParams, ground: GroundParams) -> np.ndarray:
    """Right-hand side ``sum_i B_gi^T u_gi + u_t`` in generalized coordinates."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    grf, _ = contact_force_array(x, params, ground)
    contact = np.einsum("...kij,...ki->...j", foot_jacobians(x, params), grf)
    rotation = euler_to_rotation(x[..., EULER])
    thrust_force = np.einsum("...ij,...j->...i", rotation, u[..., FORCE])
    return contact + np.concatenate([thrust_force, u[..., MOMENT]], axis=-1)


def state_derivative(x: ArrayLike, u: ArrayLike, params: RobotParams, ground: GroundParams) -> np.ndarray:
    """
    Array form of :func:`dynamics_rhs`; broadcasts over leading dimensions.

    Raises:
        NearSingular: If any sample violates the pitch guard
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    euler_dot = euler_rates(x[..., EULER], x[..., ANGULAR_VELOCITY], params.eps_pitch)
    _, cv, g = generalized_matrices(x, params)
    v_dot = _solve_mass(params, generalized_forces(x, u, params, ground) - cv - g)

    xdot = np.empty(np.broadcast_shapes(x.shape, u.shape[:-1] + (STATE_DIM,)))
    xdot[..., 0:3] = x[..., LINEAR_VELOCITY]
    xdot[..., 3:6] = euler_dot
    xdot[..., 6:18] = x[..., JOINT_RATES]
    xdot[..., 18:24] = v_dot
    xdot[..., 24:36] = u[..., JOINT_INPUTS]
    return xdot


def dynamics_rhs(state: StateLike, control: InputLike, params: RobotParams, ground: GroundParams) -> np.ndarray:
    """
    Full state derivative ``x_dot = f(x, u)``.

    ``x_dot = [pdot_B, E^-1 omega, qdot_L, D^-1 (sum B_gi^T u_gi + u_t - Cv - G), u_L]``

    Args:
        state: FullState or flat 36-vector
        control: ControlInput or flat 18-vector
        params: Robot parameters
        ground: Ground contact constants

    Returns:
        The 36-entry state derivative

    Raises:
        NearSingular: If the pitch guard is violated
    """
    return state_derivative(_state_array(state), _input_array(control), params, ground)
