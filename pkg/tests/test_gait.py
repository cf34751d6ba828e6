"""
Unit tests for the heuristic gait generator.

Tests the Bezier curves, the diagonal-pair schedule and the joint
references that the tracking law consumes.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.spatial import Delaunay

from hrom.exceptions import Infeasible, OutOfRange
from hrom.gait import (
    BezierCurve,
    ContactSchedule,
    GaitParams,
    JointReference,
    Phase,
    TrackingGains,
    bezier_eval,
    build_gait,
    foot_targets,
    joint_reference,
    joint_tracking,
    sample_times,
    stance_pairs,
)
from hrom.model import LEG_IDS, leg_inverse_kinematics


class TestGaitParams:
    """Test GaitParams validation and derived values."""

    def test_step_length_derived(self, gait_params) -> None:
        """Test that the stroke follows from speed and step time."""
        assert gait_params.step_length == pytest.approx(0.04)
        assert gait_params.half_cycle == pytest.approx(0.45)

    def test_inconsistent_step_length(self) -> None:
        """Test that a stroke disagreeing with v * T is rejected."""
        with pytest.raises(ValueError, match="inconsistent"):
            GaitParams(forward_velocity_ref=0.1, step_time=0.4, step_length=0.1)

    def test_bow(self) -> None:
        """Test the default and explicit outward clearance."""
        assert GaitParams(stance_y_offset=0.04).bow == 0.04
        assert GaitParams(stance_y_offset=0.0).bow == 0.02
        assert GaitParams(swing_bow=0.07).bow == 0.07

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"step_time": 0.0}, "step_time"),
            ({"pause_time": -0.1}, "pause_time"),
            ({"step_height": 0.0}, "step_height"),
            ({"forward_velocity_ref": -0.1}, "forward_velocity_ref"),
            ({"x_profile": (0.0, 1.0)}, "x_profile"),
        ],
    )
    def test_invalid(self, kwargs, match) -> None:
        """Test that invalid inputs are rejected."""
        with pytest.raises(ValueError, match=match):
            GaitParams(**kwargs)


class TestBezier:
    """Test Bezier curve evaluation."""

    @pytest.fixture
    def curve(self, rng) -> BezierCurve:
        """Curve with random control points."""
        return BezierCurve(rng.normal(size=(7, 3)))

    def test_endpoints(self, curve) -> None:
        """Test that the curve interpolates its first and last points."""
        np.testing.assert_allclose(bezier_eval(curve, 0.0)[0], curve.start, atol=1e-14)
        np.testing.assert_allclose(bezier_eval(curve, 1.0)[0], curve.end, atol=1e-14)

    def test_end_tangents(self, curve) -> None:
        """Test the end derivatives 6 (P1 - P0) and 6 (P6 - P5)."""
        pts = curve.control_points
        np.testing.assert_allclose(bezier_eval(curve, 0.0)[1], 6.0 * (pts[1] - pts[0]), atol=1e-12)
        np.testing.assert_allclose(bezier_eval(curve, 1.0)[1], 6.0 * (pts[6] - pts[5]), atol=1e-12)

    def test_derivative_matches_difference(self, curve) -> None:
        """Test the analytic derivative against a central difference."""
        h = 1e-6
        numeric = (bezier_eval(curve, 0.4 + h)[0] - bezier_eval(curve, 0.4 - h)[0]) / (2 * h)
        np.testing.assert_allclose(bezier_eval(curve, 0.4)[1], numeric, atol=1e-6)

    @pytest.mark.parametrize("s", [-0.01, 1.01])
    def test_out_of_range(self, curve, s) -> None:
        """Test that parameters outside [0, 1] are rejected."""
        with pytest.raises(OutOfRange):
            bezier_eval(curve, s)

    def test_shape_checked(self) -> None:
        """Test that a wrong number of control points is rejected."""
        with pytest.raises(ValueError, match="shape"):
            BezierCurve(np.zeros((6, 3)))

    def test_immutable(self, curve) -> None:
        """Test that control points cannot be modified in place."""
        with pytest.raises(ValueError):
            curve.control_points[0, 0] = 1.0

    def test_convex_hull(self, curve) -> None:
        """Test that every curve point lies inside the hull of its control points."""
        hull = Delaunay(curve.control_points)
        points = np.array([bezier_eval(curve, float(s))[0] for s in np.linspace(0.005, 0.995, 199)])
        assert np.all(hull.find_simplex(points) >= 0)

    def test_gait_curves_inside_control_box(self, gait) -> None:
        """Test the hull property on the degenerate gait curves through their bounding boxes."""
        for curves in gait.curves.values():
            for name in ("transient", "first", "swing", "stance"):
                curve = getattr(curves, name)
                points = np.array([bezier_eval(curve, float(s))[0] for s in np.linspace(0.0, 1.0, 101)])
                assert np.all(points >= curve.control_points.min(axis=0) - 1e-12)
                assert np.all(points <= curve.control_points.max(axis=0) + 1e-12)


class TestContactSchedule:
    """Test the diagonal-pair schedule."""

    @pytest.fixture
    def schedule(self) -> ContactSchedule:
        return ContactSchedule(step_time=0.4, pause_time=0.05, transient_time=0.25, duration=3.5)

    def test_segments(self, schedule) -> None:
        """Test locating times in the timeline."""
        assert schedule.segment(0.1) == ("transient", -1, 0.0, 0.25)
        kind, k, start, length = schedule.segment(0.3)
        assert (kind, k) == ("step", 0)
        assert start == pytest.approx(0.25)
        assert length == 0.4
        kind, k, start, length = schedule.segment(0.67)
        assert (kind, k) == ("pause", 0)
        assert start == pytest.approx(0.65)
        kind, k, _, _ = schedule.segment(0.8)
        assert (kind, k) == ("step", 1)

    def test_transient_is_pause(self, schedule) -> None:
        """Test that all legs are in PAUSE during the transient."""
        assert set(schedule.phases(0.1).values()) == {Phase.PAUSE}

    def test_pair_a_swings_first(self, schedule) -> None:
        """Test the phases during the first step."""
        phases = schedule.phases(0.3)
        assert phases["FR"] is Phase.SWING and phases["HL"] is Phase.SWING
        assert phases["FL"] is Phase.STANCE and phases["HR"] is Phase.STANCE

    def test_pairs_alternate(self, schedule) -> None:
        """Test that the second step swaps the pairs."""
        phases = schedule.phases(0.8)
        assert phases["FL"] is Phase.SWING and phases["HR"] is Phase.SWING
        assert phases["FR"] is Phase.STANCE and phases["HL"] is Phase.STANCE

    def test_diagonal_pairs_share_phase(self, schedule) -> None:
        """Test that diagonal partners never differ in phase."""
        for t in np.linspace(0.0, 3.5, 200):
            phases = schedule.phases(float(t))
            assert phases["FR"] is phases["HL"]
            assert phases["FL"] is phases["HR"]

    def test_pause_holds_all_feet(self, schedule) -> None:
        """Test that all legs pause between steps."""
        assert set(schedule.phases(0.67).values()) == {Phase.PAUSE}

    def test_stance_pairs(self, schedule) -> None:
        """Test the loaded legs listed per sample time."""
        assert stance_pairs(schedule, [0.1, 0.3, 0.67, 0.8]) == [(), ("HR", "FL"), (), ("FR", "HL")]

    def test_one_diagonal_pair_loaded(self, schedule) -> None:
        """Test that exactly one diagonal pair is in stance whenever the robot steps."""
        times = sample_times(schedule.duration, 1e-3)
        for t, loaded in zip(times, stance_pairs(schedule, times)):
            kind, _, _, _ = schedule.segment(float(t))
            if kind == "step":
                assert set(loaded) in ({"FR", "HL"}, {"FL", "HR"}), t
            else:
                assert loaded == (), t


class TestBuildGait:
    """Test gait construction."""

    def test_curves_per_leg(self, gait) -> None:
        """Test that every leg gets its four curves."""
        assert set(gait.curves) == set(LEG_IDS)

    def test_transient_draws_feet_inward(self, gait) -> None:
        """Test that the opening transient ends on the narrow stance."""
        for leg_id in LEG_IDS:
            curve = gait.curves[leg_id].transient
            np.testing.assert_allclose(curve.start, [0.0, 0.0, -0.3])
            assert abs(curve.end[1]) == pytest.approx(0.04)
        # Right legs move toward +y, left legs toward -y
        assert gait.curves["FR"].transient.end[1] > 0.0
        assert gait.curves["FL"].transient.end[1] < 0.0

    def test_swing_apex(self, gait, gait_params) -> None:
        """Test that a swing reaches the step height and bow at mid-swing."""
        curve = gait.curves["FR"].swing
        mid, _ = bezier_eval(curve, 0.5)
        assert mid[2] == pytest.approx(-0.3 + gait_params.step_height)
        assert mid[1] == pytest.approx(0.04 - gait_params.bow)
        assert mid[0] == pytest.approx(0.0, abs=1e-12)

    def test_stance_strokes_backward(self, gait, gait_params) -> None:
        """Test that a stance line covers one stroke backward."""
        curve = gait.curves["HL"].stance
        assert curve.start[0] - curve.end[0] == pytest.approx(gait_params.step_length)
        assert curve.start[2] == curve.end[2] == pytest.approx(-0.3)

    def test_advance_target(self, gait) -> None:
        """Test the net advance implied by the default walk."""
        assert gait.advance_target() == pytest.approx(0.27)

    def test_standing_advance(self, standing_gait) -> None:
        """Test that a standing gait advances nowhere."""
        assert standing_gait.advance_target() == 0.0

    def test_unreachable(self, robot) -> None:
        """Test that a stand length beyond the leg limit is infeasible."""
        with pytest.raises(Infeasible, match="reachable"):
            build_gait(GaitParams(stand_length=0.6), robot)


class TestJointReference:
    """Test joint references."""

    def test_start_is_straight_legs(self, gait) -> None:
        """Test the references at t = 0."""
        ref = joint_reference(0.0, gait)
        np.testing.assert_allclose(ref.positions, np.tile([0.0, 0.0, 0.3], 4), atol=1e-12)
        np.testing.assert_allclose(ref.rates, np.zeros(12), atol=1e-12)

    def test_shapes(self, gait) -> None:
        """Test that every component has 12 entries."""
        ref = joint_reference(1.0, gait)
        assert ref.positions.shape == ref.rates.shape == ref.accels.shape == (12,)

    def test_rates_match_positions(self, gait) -> None:
        """Test the chain-rule rates against differenced positions."""
        t, h = 0.45, 1e-6
        numeric = (joint_reference(t + h, gait).positions - joint_reference(t - h, gait).positions) / (2 * h)
        np.testing.assert_allclose(joint_reference(t, gait).rates, numeric, atol=1e-6)

    def test_accels_match_rates(self, gait) -> None:
        """Test the accelerations against differenced rates."""
        t, h = 0.45, 1e-5
        numeric = (joint_reference(t + h, gait).rates - joint_reference(t - h, gait).rates) / (2 * h)
        np.testing.assert_allclose(joint_reference(t, gait).accels, numeric, atol=1e-3)

    def test_pause_holds_reference(self, gait) -> None:
        """Test that a pause holds the end of the preceding step."""
        ref = joint_reference(0.67, gait)
        np.testing.assert_array_equal(ref.rates, np.zeros(12))
        np.testing.assert_array_equal(ref.accels, np.zeros(12))
        targets = foot_targets(0.67, gait)
        np.testing.assert_allclose(targets[0], [0.02, 0.04, -0.3], atol=1e-12)
        np.testing.assert_allclose(ref.positions, leg_inverse_kinematics(targets).reshape(-1), atol=1e-12)

    @pytest.mark.parametrize("t", [-0.1, 3.6])
    def test_out_of_range(self, gait, t) -> None:
        """Test that times outside the horizon are rejected."""
        with pytest.raises(OutOfRange):
            joint_reference(t, gait)

    def test_deterministic(self, gait) -> None:
        """Test that repeated queries agree bit for bit."""
        a = joint_reference(1.234, gait)
        b = joint_reference(1.234, gait)
        np.testing.assert_array_equal(a.positions, b.positions)
        np.testing.assert_array_equal(a.accels, b.accels)

    @pytest.mark.slow
    def test_lengths_within_limits(self, gait, robot) -> None:
        """Test that the leg-length references respect the limits over the whole horizon."""
        lo, hi = robot.leg_length_limits
        for t in sample_times(gait.params.duration, 1e-3):
            lengths = joint_reference(float(t), gait).positions[2::3]
            assert np.all(lengths >= lo) and np.all(lengths <= hi), t

    def test_handoffs_continuous(self, gait) -> None:
        """Test that each phase curve starts where the previous one ended."""
        p = gait.params
        step_starts = np.arange(p.transient_time, p.duration - p.step_time, p.half_cycle)
        assert len(step_starts) > 3
        for leg_id in LEG_IDS:
            previous, _, _, _ = gait.curve_at(leg_id, 0.5 * p.transient_time)
            for start in step_starts:
                current, _, _, _ = gait.curve_at(leg_id, start + 0.5 * p.step_time)
                np.testing.assert_allclose(current.start, previous.end, rtol=0.0, atol=1e-9)
                previous = current

    def test_pause_to_step_targets_continuous(self, gait) -> None:
        """Test that the held pause targets match the start of the next step."""
        p = gait.params
        for k in range(1, 6):
            next_start = p.transient_time + k * p.half_cycle
            held = foot_targets(next_start - 0.5 * p.pause_time, gait)
            np.testing.assert_allclose(foot_targets(next_start + 1e-12, gait), held, rtol=0.0, atol=1e-9)


class TestJointTracking:
    """Test the joint-space tracking law."""

    def test_position_error(self) -> None:
        """Test the proportional term."""
        ref = JointReference(positions=np.zeros(12), rates=np.zeros(12), accels=np.zeros(12))
        u = joint_tracking(np.full(12, 0.01), np.zeros(12), ref)
        np.testing.assert_allclose(u, np.full(12, -4.0))

    def test_feedforward_and_damping(self) -> None:
        """Test the feedforward and rate terms."""
        ref = JointReference(positions=np.zeros(12), rates=np.ones(12), accels=np.full(12, 2.0))
        u = joint_tracking(np.zeros(12), np.zeros(12), ref, TrackingGains(kp=0.0, kd=3.0))
        np.testing.assert_allclose(u, np.full(12, 5.0))

    def test_negative_gains(self) -> None:
        """Test that negative gains are rejected."""
        with pytest.raises(ValueError):
            TrackingGains(kp=-1.0)

    def test_step_overshoot(self) -> None:
        """Test that the default gains settle a 5 cm length step with under 5% overshoot."""
        start, target = 0.25, 0.3
        ref = JointReference(positions=np.full(12, target), rates=np.zeros(12), accels=np.zeros(12))

        def closed_loop(t, x):
            return np.concatenate([x[12:], joint_tracking(x[:12], x[12:], ref)])

        x0 = np.concatenate([np.full(12, start), np.zeros(12)])
        sol = solve_ivp(closed_loop, (0.0, 1.0), x0, rtol=1e-10, atol=1e-12, max_step=1e-3)
        overshoot = (sol.y[:12].max() - target) / (target - start)
        assert overshoot < 0.05
        assert sol.y[:12, -1] == pytest.approx(target, abs=1e-6)


class TestSampleTimes:
    """Test uniform sample times."""

    def test_inclusive(self) -> None:
        """Test that both ends are covered."""
        times = sample_times(1.0, 0.1)
        assert len(times) == 11
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(1.0)
