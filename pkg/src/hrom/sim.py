"""
Forward simulation.

A fixed-step RK4 integrator advances the full state under a zero-order
hold on the control. Each step the joint tracking law produces the leg
inputs from the gait references and a pose-error controller produces the
thrust wrench, which is allocated to the four fans and re-condensed so the
logged wrench is exactly what the body feels.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .contact import GroundParams
from .dynamics import (
    CONTROL_DIM,
    ControlInput,
    ThrusterForces,
    Wrench,
    contact_force_array,
    state_derivative,
    thruster_allocation_matrix,
    wrench_allocation,
)
from .exceptions import NearSingular, NonFinite
from .gait import GaitPlan, JointReference, Phase, TrackingGains, joint_reference, joint_tracking
from .model import (
    ANGULAR_VELOCITY,
    EULER,
    JOINT_RATES,
    JOINTS,
    LEG_IDS,
    STATE_DIM,
    ArrayLike,
    BodyPose,
    EulerAngles,
    FullState,
    LegJoints,
    RobotParams,
    euler_to_rotation,
    foot_positions,
    kinetic_energy,
    potential_energy,
    rotation_to_euler,
    wrap_angle,
)

logger = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
DEFAULT_DURATION = 3.5
DEFAULT_KP_ATT = (30.0, 30.0, 30.0)
DEFAULT_KD_ATT = (5.0, 5.0, 5.0)
DEFAULT_THRUST_FRACTION = 0.3
SLIP_NORMAL_THRESHOLD = 1.0

Derivative = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _diagonal(values: ArrayLike, name: str) -> Tuple[float, float, float]:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape == (1,):
        arr = np.repeat(arr, 3)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 diagonal entries")
    if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite and non-negative")
    return tuple(float(v) for v in arr)  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class SimConfig:
    """
    Simulation settings.

    Attitude gains are diagonal and act on body axes ``(x, y, z)``, i.e. on
    the ``(roll, pitch, yaw)`` errors. ``initial_state`` defaults to the
    light-contact stance produced by :func:`initial_state`.
    """

    dt: float = DEFAULT_DT
    duration: float = DEFAULT_DURATION
    kp_att: Tuple[float, float, float] = DEFAULT_KP_ATT
    kd_att: Tuple[float, float, float] = DEFAULT_KD_ATT
    reference_attitude: EulerAngles = field(default_factory=EulerAngles)
    initial_state: Optional[FullState] = None
    thrust_fraction: float = DEFAULT_THRUST_FRACTION
    thrust_enabled: bool = True
    tracking: TrackingGains = field(default_factory=TrackingGains)

    def __post_init__(self) -> None:
        """Validate settings after initialization."""
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.duration >= self.dt:
            raise ValueError("duration must be at least dt")
        object.__setattr__(self, "kp_att", _diagonal(self.kp_att, "kp_att"))
        object.__setattr__(self, "kd_att", _diagonal(self.kd_att, "kd_att"))
        if not 0.0 <= self.thrust_fraction <= 1.0:
            raise ValueError("thrust_fraction must lie in [0, 1]")
        if not isinstance(self.reference_attitude, EulerAngles):
            raise ValueError("reference_attitude must be EulerAngles")

    @property
    def steps(self) -> int:
        """Number of integration steps."""
        return int(round(self.duration / self.dt))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Logged simulation rows.

    Attributes:
        times: Sample times ``(N,)``, uniform spacing
        states: Flat states ``(N, 36)``
        controls: Applied controls ``(N, 18)``
        ground_forces: Per-leg GRFs ``(N, 4, 3)``
        contacts: Per-leg contact flags ``(N, 4)``
        thruster_forces: Fan forces ``(N, 4)``
        aborted: Whether the run stopped early
        abort_reason: Diagnostic of the abort
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    ground_forces: np.ndarray
    contacts: np.ndarray
    thruster_forces: np.ndarray
    aborted: bool = False
    abort_reason: Optional[str] = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        n = times.shape[0]
        if times.ndim != 1 or n == 0:
            raise ValueError("times must be a non-empty 1-D array")
        if n > 1:
            steps = np.diff(times)
            if np.any(steps <= 0.0):
                raise ValueError("times must be strictly increasing")
            if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(times[-1])):
                raise ValueError("times must be uniformly spaced")
        shapes = {
            "states": (n, STATE_DIM),
            "controls": (n, CONTROL_DIM),
            "ground_forces": (n, 4, 3),
            "contacts": (n, 4),
            "thruster_forces": (n, 4),
        }
        for name, shape in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=bool if name == "contacts" else float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def dt(self) -> float:
        """Sample spacing (0 for a single row)."""
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    def state(self, k: int) -> FullState:
        """Row ``k`` as a FullState."""
        return FullState.unflatten(self.states[k])

    def control(self, k: int) -> ControlInput:
        """Row ``k`` as a ControlInput."""
        return ControlInput.unflatten(self.controls[k])

    @property
    def final_state(self) -> FullState:
        return self.state(len(self) - 1)


def rk4_step(
    f: Callable[..., np.ndarray],
    x: Union[FullState, ArrayLike],
    u: Union[ControlInput, ArrayLike, None],
    dt: float,
) -> Union[FullState, np.ndarray]:
    """
    Advance ``x`` by one classical Runge-Kutta step with ``u`` held constant.

    Args:
        f: Derivative ``f(x, u)``
        x: FullState or array state
        u: Control held over the step
        dt: Step size

    Returns:
        Next state, of the same kind as ``x``

    Raises:
        ValueError: If ``dt`` is not positive
        NonFinite: If any entry of the result is not finite
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if isinstance(u, ControlInput):
        u = u.flatten()
    if isinstance(x, FullState):
        return FullState.unflatten(rk4_step(f, x.flatten(), u, dt))

    x = np.asarray(x, dtype=float)
    k1 = f(x, u)
    k2 = f(x + 0.5 * dt * k1, u)
    k3 = f(x + 0.5 * dt * k2, u)
    k4 = f(x + dt * k3, u)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFinite("RK4 step produced a non-finite state")
    return out


def attitude_error(state: Union[FullState, ArrayLike], reference: EulerAngles) -> np.ndarray:
    """Wrapped pose error ``Phi_ref - Phi_B`` as ``[yaw, pitch, roll]``, from ``R_B``."""
    x = state.flatten() if isinstance(state, FullState) else np.asarray(state, dtype=float)
    current = rotation_to_euler(euler_to_rotation(x[..., EULER]))
    return wrap_angle(reference.as_array() - current)


def attitude_thrust_controller(
    state: Union[FullState, ArrayLike],
    config: SimConfig,
    robot: RobotParams,
) -> Tuple[Wrench, ThrusterForces]:
    """
    Pose-error attitude controller.

    The desired moment is ``K_p e - K_d omega`` on body axes, the desired
    z-force a fixed share of the weight. The request is allocated to the
    fans and the clamped forces re-condensed, so the returned wrench is the
    one actually applied.

    Raises:
        NearSingular: If the pitch guard is violated
    """
    x = state.flatten() if isinstance(state, FullState) else np.asarray(state, dtype=float)
    pitch = float(x[EULER][1])
    if abs(math.cos(pitch)) < robot.eps_pitch:
        raise NearSingular("attitude controller evaluated near gimbal lock", pitch=pitch)
    if not config.thrust_enabled:
        return Wrench(), ThrusterForces()

    yaw_e, pitch_e, roll_e = attitude_error(x, config.reference_attitude)
    error = np.array([roll_e, pitch_e, yaw_e])
    moment = np.asarray(config.kp_att) * error - np.asarray(config.kd_att) * x[ANGULAR_VELOCITY]
    force = np.array([0.0, 0.0, config.thrust_fraction * robot.weight])

    forces = wrench_allocation(Wrench(force=force, moment=moment), robot)
    applied = Wrench.from_array(thruster_allocation_matrix(robot) @ forces.forces)
    return applied, forces


def initial_state(
    robot: RobotParams,
    ground: GroundParams,
    stand_length: float = 0.3,
    thrust_fraction: float = DEFAULT_THRUST_FRACTION,
    thrust_enabled: bool = True,
    height: Optional[float] = None,
) -> FullState:
    """
    Level body standing on four straight legs in light contact.

    Without an explicit ``height`` the feet penetrate the ground by the
    static deflection that carries the weight not supplied by thrust.
    """
    if height is None:
        share = thrust_fraction if thrust_enabled else 0.0
        deflection = robot.weight * (1.0 - share) / (4.0 * ground.k_gz)
        height = ground.ground_height + stand_length - deflection
    return FullState(
        pose=BodyPose(position=np.array([0.0, 0.0, height])),
        legs=LegJoints.uniform(length=stand_length),
    )


class Simulator:
    """
    Closed-loop simulation of the robot walking a gait.

    One instance holds a single configuration; :meth:`run` is deterministic
    and may be called repeatedly.
    """

    def __init__(self, config: SimConfig, gait: GaitPlan, robot: RobotParams, ground: GroundParams) -> None:
        self.config = config
        self.gait = gait
        self.robot = robot
        self.ground = ground
        self._derivative: Derivative = lambda x, u: state_derivative(x, u, robot, ground)

    def start_state(self) -> FullState:
        """Configured initial state, or the light-contact stance."""
        if self.config.initial_state is not None:
            return self.config.initial_state
        return initial_state(
            self.robot,
            self.ground,
            stand_length=self.gait.params.stand_length,
            thrust_fraction=self.config.thrust_fraction,
            thrust_enabled=self.config.thrust_enabled,
        )

    def reference(self, t: float) -> JointReference:
        return joint_reference(min(t, self.gait.params.duration), self.gait, self.robot)

    def control(self, t: float, x: np.ndarray) -> Tuple[np.ndarray, ThrusterForces]:
        """Flat control applied over the step starting at ``(t, x)``."""
        u = np.empty(CONTROL_DIM)
        wrench, forces = attitude_thrust_controller(x, self.config, self.robot)
        u[:6] = wrench.as_array()
        u[6:] = joint_tracking(x[JOINTS], x[JOINT_RATES], self.reference(t), self.config.tracking)
        return u, forces

    def run(self) -> Trajectory:
        """
        Integrate over the configured duration.

        Returns:
            Trajectory with ``steps + 1`` rows, or the partial rows with
            ``aborted`` set if the state blew up or hit the pitch guard
        """
        cfg = self.config
        n = cfg.steps
        times = np.arange(n + 1) * cfg.dt
        states = np.zeros((n + 1, STATE_DIM))
        controls = np.zeros((n + 1, CONTROL_DIM))
        fans = np.zeros((n + 1, 4))
        saturated = 0
        reason: Optional[str] = None

        x = self.start_state().flatten()
        logger.info(f"Simulating {cfg.duration} s at dt={cfg.dt} s ({n} steps)")
        rows = 0
        try:
            for k in range(n + 1):
                u, forces = self.control(float(times[k]), x)
                states[k], controls[k], fans[k] = x, u, forces.forces
                saturated += forces.saturated
                rows = k + 1
                if k == n:
                    break
                x = rk4_step(self._derivative, x, u, cfg.dt)
        except (NonFinite, NearSingular) as exc:
            reason = str(exc)
            if rows == 0:
                # Abort before the first control: log the start state alone
                states[0] = x
                rows = 1
            logger.error(f"Simulation aborted at t={times[rows]:.4f} s: {reason}")

        if saturated:
            logger.warning(f"Thruster allocation saturated on {saturated} of {rows} steps")
        grf, contacts = contact_force_array(states[:rows], self.robot, self.ground)
        return Trajectory(
            times=times[:rows],
            states=states[:rows],
            controls=controls[:rows],
            ground_forces=grf,
            contacts=contacts,
            thruster_forces=fans[:rows],
            aborted=reason is not None,
            abort_reason=reason,
        )


def simulate(config: SimConfig, gait: GaitPlan, robot: RobotParams, ground: GroundParams) -> Trajectory:
    """Run a closed-loop simulation; see :class:`Simulator`."""
    return Simulator(config, gait, robot, ground).run()


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryMetrics:
    """Summary figures of a run."""

    forward_displacement: float
    lateral_drift: float
    max_abs_roll: float
    max_abs_pitch: float
    max_angular_rate: float
    max_total_thrust: float
    max_stance_slip: float
    final_normal_force: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


def stance_slip(trajectory: Trajectory, robot: RobotParams, gait: Optional[GaitPlan] = None) -> np.ndarray:
    """
    Worst tangential foot drift per leg while loaded (normal force > 1 N).

    With a gait, drift is measured within each scheduled stance phase;
    without one, within each contiguous loaded interval.

    Returns:
        Array ``(4,)`` of drifts in meters
    """
    feet = foot_positions(trajectory.states, robot)[..., :2]
    loaded = trajectory.ground_forces[..., 2] > SLIP_NORMAL_THRESHOLD
    worst = np.zeros(len(LEG_IDS))
    for i, leg_id in enumerate(LEG_IDS):
        anchor: Optional[np.ndarray] = None
        current: Optional[int] = None
        for k, t in enumerate(trajectory.times):
            if gait is not None:
                in_stance = gait.phase(leg_id, float(t)) is Phase.STANCE
                segment = gait.schedule.segment(float(t))[1] if in_stance else None
            else:
                segment = 0 if loaded[k, i] else None
            if segment != current:
                anchor, current = None, segment
            if segment is None or not loaded[k, i]:
                continue
            if anchor is None:
                anchor = feet[k, i]
            worst[i] = max(worst[i], float(np.linalg.norm(feet[k, i] - anchor)))
    return worst


def compute_metrics(trajectory: Trajectory, robot: RobotParams, gait: Optional[GaitPlan] = None) -> TrajectoryMetrics:
    """Summaries used by the verification suite and the metadata sidecar."""
    x = trajectory.states
    return TrajectoryMetrics(
        forward_displacement=float(x[-1, 0] - x[0, 0]),
        lateral_drift=float(x[-1, 1] - x[0, 1]),
        max_abs_roll=float(np.max(np.abs(x[:, 5]))),
        max_abs_pitch=float(np.max(np.abs(x[:, 4]))),
        max_angular_rate=float(np.max(np.linalg.norm(x[:, ANGULAR_VELOCITY], axis=-1))),
        max_total_thrust=float(np.max(np.sum(trajectory.thruster_forces, axis=-1))),
        max_stance_slip=float(np.max(stance_slip(trajectory, robot, gait))),
        final_normal_force=float(np.sum(trajectory.ground_forces[-1, :, 2])),
    )


def total_energy(trajectory: Trajectory, robot: RobotParams) -> np.ndarray:
    """Kinetic plus potential energy per row."""
    return kinetic_energy(trajectory.states, robot) + potential_energy(trajectory.states, robot)


def angular_momentum(trajectory: Trajectory, robot: RobotParams) -> np.ndarray:
    """Magnitude of the body angular momentum ``|I omega|`` per row."""
    return np.linalg.norm(trajectory.states[:, ANGULAR_VELOCITY] @ robot.inertia.T, axis=-1)

