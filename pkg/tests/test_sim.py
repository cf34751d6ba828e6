"""
Unit tests for the forward simulator.

Tests the RK4 step, the attitude thrust controller, the closed-loop
run and the trajectory metrics.
"""

import math

import numpy as np
import pytest

from hrom.exceptions import NearSingular, NonFinite
from hrom.model import BodyPose, BodyVelocity, EulerAngles, FullState, default_state
from hrom.sim import (
    SimConfig,
    Trajectory,
    attitude_error,
    attitude_thrust_controller,
    compute_metrics,
    initial_state,
    rk4_step,
    simulate,
    stance_slip,
)


def _sliding_trajectory(n: int = 11, duration: float = 1.0) -> Trajectory:
    """Body gliding 0.3 m forward on rigid legs with every foot loaded."""
    states = np.tile(default_state().flatten(), (n, 1))
    states[:, 0] = np.linspace(0.0, 0.3, n)
    ground_forces = np.zeros((n, 4, 3))
    ground_forces[:, :, 2] = 10.0
    return Trajectory(
        times=np.linspace(0.0, duration, n),
        states=states,
        controls=np.zeros((n, 18)),
        ground_forces=ground_forces,
        contacts=np.ones((n, 4), dtype=bool),
        thruster_forces=np.tile([1.0, 2.0, 3.0, 4.0], (n, 1)),
    )


class TestSimConfig:
    """Test SimConfig validation."""

    def test_defaults(self) -> None:
        """Test the default settings."""
        config = SimConfig()
        assert config.dt == 1e-3
        assert config.steps == 3500
        assert config.kp_att == (30.0, 30.0, 30.0)

    def test_scalar_gain_broadcast(self) -> None:
        """Test that a scalar gain applies to all axes."""
        assert SimConfig(kd_att=(4.0,)).kd_att == (4.0, 4.0, 4.0)

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"dt": 0.0}, "dt"),
            ({"duration": 1e-4}, "duration"),
            ({"kp_att": (1.0, -1.0, 1.0)}, "kp_att"),
            ({"kd_att": (1.0, 1.0)}, "kd_att"),
            ({"thrust_fraction": 1.5}, "thrust_fraction"),
        ],
    )
    def test_invalid(self, kwargs, match) -> None:
        """Test that invalid settings are rejected."""
        with pytest.raises(ValueError, match=match):
            SimConfig(**kwargs)


class TestRK4:
    """Test the fixed-step integrator."""

    def test_linear_decay(self) -> None:
        """Test one step of x' = -x against the fourth-order Taylor sum."""
        h = 0.1
        out = rk4_step(lambda x, u: -x, np.array([1.0]), None, h)
        assert out[0] == pytest.approx(1.0 - h + h**2 / 2 - h**3 / 6 + h**4 / 24, abs=1e-15)

    def test_quadratic_exact(self) -> None:
        """Test that constant acceleration is integrated exactly."""
        f = lambda x, u: np.array([x[1], -9.80665])
        x = np.array([10.0, 0.0])
        for _ in range(10):
            x = rk4_step(f, x, None, 0.01)
        assert x[0] == pytest.approx(10.0 - 0.5 * 9.80665 * 0.1**2, abs=1e-12)
        assert x[1] == pytest.approx(-0.980665, abs=1e-12)

    def test_full_state_in_full_state_out(self, robot, ground) -> None:
        """Test that a typed state comes back typed."""
        from hrom.dynamics import state_derivative

        out = rk4_step(
            lambda x, u: state_derivative(x, u, robot, ground),
            default_state(height=5.0),
            np.zeros(18),
            1e-3,
        )
        assert isinstance(out, FullState)
        assert out.velocity.linear[2] == pytest.approx(-9.81e-3, rel=1e-9)

    def test_non_finite(self) -> None:
        """Test that a blown-up step raises NonFinite."""
        with pytest.raises(NonFinite):
            rk4_step(lambda x, u: np.full_like(x, np.inf), np.zeros(2), None, 0.1)

    def test_bad_step(self) -> None:
        """Test that a non-positive step is rejected."""
        with pytest.raises(ValueError):
            rk4_step(lambda x, u: x, np.zeros(2), None, 0.0)


class TestAttitudeController:
    """Test the pose-error thrust controller."""

    def test_error_wraps(self) -> None:
        """Test that the yaw error takes the short way around."""
        state = FullState(pose=BodyPose(orientation=EulerAngles(yaw=-3.1)))
        error = attitude_error(state, EulerAngles(yaw=3.1))
        assert error[0] == pytest.approx(6.2 - 2 * math.pi)

    def test_roll_correction(self, robot) -> None:
        """Test a 0.1 rad roll error under a roll gain of 20."""
        state = FullState(pose=BodyPose(position=np.array([0.0, 0.0, 1.0]), orientation=EulerAngles(roll=-0.1)))
        config = SimConfig(kp_att=(20.0, 20.0, 20.0), kd_att=(1.0, 1.0, 1.0))
        applied, forces = attitude_thrust_controller(state, config, robot)
        np.testing.assert_allclose(applied.moment, [2.0, 0.0, 0.0], atol=1e-9)
        assert applied.force[2] == pytest.approx(0.3 * robot.weight)
        assert not forces.saturated
        # Right fans (negative y) push less to roll toward +x
        assert forces.forces[0] < forces.forces[2]

    def test_damping(self, robot) -> None:
        """Test the rate term on a spinning level body."""
        state = FullState(velocity=BodyVelocity(angular=np.array([0.0, 0.2, 0.0])))
        applied, _ = attitude_thrust_controller(state, SimConfig(kd_att=(5.0, 5.0, 5.0)), robot)
        np.testing.assert_allclose(applied.moment, [0.0, -1.0, 0.0], atol=1e-9)

    def test_disabled(self, robot) -> None:
        """Test that disabled thrust yields a zero wrench."""
        state = FullState(pose=BodyPose(orientation=EulerAngles(roll=0.3)))
        applied, forces = attitude_thrust_controller(state, SimConfig(thrust_enabled=False), robot)
        np.testing.assert_array_equal(applied.as_array(), np.zeros(6))
        np.testing.assert_array_equal(forces.forces, np.zeros(4))

    def test_applied_within_bounds(self, robot) -> None:
        """Test that a huge request is clamped to the actuator limits."""
        state = FullState(pose=BodyPose(orientation=EulerAngles(roll=1.0, pitch=-0.8)))
        config = SimConfig(kp_att=(500.0, 500.0, 500.0), thrust_fraction=1.0)
        _, forces = attitude_thrust_controller(state, config, robot)
        assert forces.saturated
        assert forces.within_bounds(robot)

    def test_pitch_guard(self, robot) -> None:
        """Test that the controller refuses states near gimbal lock."""
        state = FullState(pose=BodyPose(orientation=EulerAngles(pitch=1.5)))
        with pytest.raises(NearSingular):
            attitude_thrust_controller(state, SimConfig(), robot)


class TestInitialState:
    """Test the light-contact starting stance."""

    def test_static_deflection(self, robot, ground) -> None:
        """Test that the feet sink by the deflection that carries the load."""
        state = initial_state(robot, ground)
        deflection = 0.7 * robot.weight / (4 * ground.k_gz)
        assert state.pose.position[2] == pytest.approx(0.3 - deflection)
        np.testing.assert_allclose(state.legs.positions, np.tile([0.0, 0.0, 0.3], (4, 1)))

    def test_without_thrust(self, robot, ground) -> None:
        """Test that the legs carry the full weight without thrust."""
        state = initial_state(robot, ground, thrust_enabled=False)
        assert state.pose.position[2] == pytest.approx(0.3 - robot.weight / (4 * ground.k_gz))

    def test_explicit_height(self, robot, ground) -> None:
        """Test that an explicit height wins."""
        assert initial_state(robot, ground, height=1.0).pose.position[2] == 1.0


class TestTrajectory:
    """Test Trajectory validation and accessors."""

    def test_accessors(self) -> None:
        """Test length, spacing and typed rows."""
        traj = _sliding_trajectory()
        assert len(traj) == 11
        assert traj.dt == pytest.approx(0.1)
        assert traj.duration == pytest.approx(1.0)
        assert traj.final_state.pose.position[0] == pytest.approx(0.3)
        assert traj.control(0).joint_accels.shape == (12,)

    def test_non_uniform_times(self) -> None:
        """Test that uneven spacing is rejected."""
        n = 3
        with pytest.raises(ValueError, match="uniformly"):
            Trajectory(
                times=np.array([0.0, 0.1, 0.3]),
                states=np.zeros((n, 36)),
                controls=np.zeros((n, 18)),
                ground_forces=np.zeros((n, 4, 3)),
                contacts=np.zeros((n, 4), dtype=bool),
                thruster_forces=np.zeros((n, 4)),
            )

    def test_shape_mismatch(self) -> None:
        """Test that a wrong state width is rejected."""
        with pytest.raises(ValueError, match="states"):
            Trajectory(
                times=np.array([0.0, 0.1]),
                states=np.zeros((2, 35)),
                controls=np.zeros((2, 18)),
                ground_forces=np.zeros((2, 4, 3)),
                contacts=np.zeros((2, 4), dtype=bool),
                thruster_forces=np.zeros((2, 4)),
            )


class TestSimulate:
    """Test closed-loop runs."""

    def test_static_balance(self, robot, ground, standing_gait) -> None:
        """Test that a standing robot keeps carrying its weight."""
        config = SimConfig(duration=0.2)
        traj = simulate(config, standing_gait, robot, ground)
        assert len(traj) == 201
        assert not traj.aborted
        total_normal = traj.ground_forces[-1, :, 2].sum()
        assert total_normal == pytest.approx(0.7 * robot.weight, rel=0.01)
        assert np.max(np.abs(traj.states[:, 2] - traj.states[0, 2])) < 1e-4
        np.testing.assert_allclose(traj.thruster_forces[0], np.full(4, 0.3 * robot.weight / 4), rtol=1e-9)

    def test_static_balance_without_thrust(self, robot, ground, standing_gait) -> None:
        """Test that the legs alone carry the weight."""
        traj = simulate(SimConfig(duration=0.2, thrust_enabled=False), standing_gait, robot, ground)
        assert traj.ground_forces[-1, :, 2].sum() == pytest.approx(robot.weight, rel=0.01)
        np.testing.assert_array_equal(traj.thruster_forces, np.zeros((201, 4)))

    def test_deterministic(self, robot, ground, gait) -> None:
        """Test that two runs agree bit for bit."""
        config = SimConfig(duration=0.05)
        a = simulate(config, gait, robot, ground)
        b = simulate(config, gait, robot, ground)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.controls, b.controls)

    def test_logged_wrench_matches_fans(self, robot, ground, gait) -> None:
        """Test that the logged thrust wrench is what the fans produce."""
        from hrom.dynamics import thruster_allocation_matrix

        traj = simulate(SimConfig(duration=0.05), gait, robot, ground)
        condensed = traj.thruster_forces @ thruster_allocation_matrix(robot).T
        np.testing.assert_allclose(traj.controls[:, :6], condensed, atol=1e-9)

    def test_abort_on_pitch_guard(self, robot, ground, standing_gait) -> None:
        """Test that a run tipping into gimbal lock stops with partial rows."""
        start = FullState(
            pose=BodyPose(position=np.array([0.0, 0.0, 5.0]), orientation=EulerAngles(pitch=1.45)),
            velocity=BodyVelocity(angular=np.array([0.0, 2.0, 0.0])),
        )
        config = SimConfig(duration=0.1, initial_state=start, thrust_enabled=False)
        traj = simulate(config, standing_gait, robot, ground)
        assert traj.aborted
        assert "pitch" in traj.abort_reason
        assert 1 < len(traj) < config.steps + 1

    def test_abort_before_first_step(self, robot, ground, standing_gait) -> None:
        """Test that an invalid start still yields the start row."""
        start = FullState(pose=BodyPose(position=np.array([0.0, 0.0, 5.0]), orientation=EulerAngles(pitch=1.5)))
        traj = simulate(SimConfig(duration=0.1, initial_state=start), standing_gait, robot, ground)
        assert traj.aborted
        assert len(traj) == 1
        np.testing.assert_array_equal(traj.states[0], start.flatten())

    def test_free_fall(self, robot, ground, standing_gait) -> None:
        """Test that an unpowered body far above the ground falls as z0 - g t^2 / 2."""
        start = initial_state(robot, ground, height=50.0)
        config = SimConfig(duration=1.0, initial_state=start, thrust_enabled=False)
        traj = simulate(config, standing_gait, robot, ground)
        assert not traj.aborted
        assert not traj.contacts.any()
        g = -robot.gravity[2]
        np.testing.assert_allclose(traj.states[:, 2], 50.0 - 0.5 * g * traj.times**2, rtol=0.0, atol=1e-9)
        np.testing.assert_allclose(traj.states[:, 20], -g * traj.times, rtol=0.0, atol=1e-9)
        np.testing.assert_allclose(traj.states[:, :2], 0.0, atol=1e-12)


class TestMetrics:
    """Test trajectory summaries."""

    def test_compute_metrics(self, robot) -> None:
        """Test the summaries of a synthetic glide."""
        metrics = compute_metrics(_sliding_trajectory(), robot)
        assert metrics.forward_displacement == pytest.approx(0.3)
        assert metrics.lateral_drift == 0.0
        assert metrics.max_abs_roll == 0.0
        assert metrics.max_total_thrust == 10.0
        assert metrics.max_stance_slip == pytest.approx(0.3)
        assert metrics.final_normal_force == 40.0
        assert set(metrics.as_dict()) >= {"forward_displacement", "max_stance_slip"}

    def test_slip_per_leg(self, robot) -> None:
        """Test that every loaded foot drifts with the body."""
        np.testing.assert_allclose(stance_slip(_sliding_trajectory(), robot), np.full(4, 0.3))

    def test_slip_ignores_unloaded(self, robot) -> None:
        """Test that feet below the load threshold are not counted."""
        traj = _sliding_trajectory()
        forces = traj.ground_forces.copy()
        forces[:, 0, 2] = 0.5
        traj = Trajectory(
            times=traj.times,
            states=traj.states,
            controls=traj.controls,
            ground_forces=forces,
            contacts=traj.contacts,
            thruster_forces=traj.thruster_forces,
        )
        assert stance_slip(traj, robot)[0] == 0.0

    def test_slip_outside_scheduled_stance(self, robot, gait) -> None:
        """Test that drift during the opening transient is not slip."""
        traj = _sliding_trajectory(n=11, duration=0.2)
        np.testing.assert_array_equal(stance_slip(traj, robot, gait), np.zeros(4))
