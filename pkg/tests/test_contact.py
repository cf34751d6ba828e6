"""
Unit tests for the ground contact model.

Tests the compliant normal force, Stribeck friction and the
narrow-path strip.
"""

import math

import numpy as np
import pytest

from hrom.contact import GroundForce, GroundParams, ground_forces, ground_reaction, stribeck_coefficient


class TestGroundParams:
    """Test GroundParams validation."""

    def test_defaults(self, ground) -> None:
        """Test the default constants."""
        assert (ground.k_gz, ground.k_dz) == (8000.0, 250.0)
        assert (ground.mu_c, ground.mu_s, ground.mu_v, ground.v_s) == (0.5, 0.6, 0.8, 0.01)
        assert math.isinf(ground.path_half_width)
        assert ground.ground_height == 0.0

    @pytest.mark.parametrize(
        "kwargs, match",
        [
            ({"k_gz": 0.0}, "k_gz"),
            ({"k_dz": -1.0}, "k_dz"),
            ({"v_s": 0.0}, "v_s"),
            ({"mu_c": 0.7}, "mu_s >= mu_c"),
            ({"mu_v": -0.1}, "mu_v"),
            ({"path_half_width": 0.0}, "path_half_width"),
        ],
    )
    def test_invalid(self, kwargs, match) -> None:
        """Test that invalid constants are rejected."""
        with pytest.raises(ValueError, match=match):
            GroundParams(**kwargs)


class TestGroundForce:
    """Test GroundForce class."""

    def test_airborne_must_be_zero(self) -> None:
        """Test that an airborne foot cannot carry force."""
        with pytest.raises(ValueError, match="zero"):
            GroundForce(force=np.array([0.0, 0.0, 1.0]), in_contact=False)

    def test_normal(self) -> None:
        """Test the normal component accessor."""
        assert GroundForce(force=np.array([1.0, 2.0, 3.0]), in_contact=True).normal == 3.0


class TestNormalForce:
    """Test the spring-damper normal force."""

    def test_airborne(self, ground) -> None:
        """Test that a foot above ground gets zero force."""
        result = ground_reaction([0.0, 0.0, 0.01], [0.3, 0.2, -1.0], ground)
        assert not result.in_contact
        np.testing.assert_array_equal(result.force, np.zeros(3))

    def test_spring(self, ground) -> None:
        """Test 1 mm penetration at rest."""
        result = ground_reaction([0.0, 0.0, -0.001], [0.0, 0.0, 0.0], ground)
        assert result.in_contact
        assert result.normal == pytest.approx(8.0, abs=1e-12)

    def test_damper(self, ground) -> None:
        """Test the damping contribution of a sinking foot."""
        result = ground_reaction([0.0, 0.0, -0.001], [0.0, 0.0, -0.01], ground)
        assert result.normal == pytest.approx(8.0 + 2.5)

    def test_no_adhesion(self, ground) -> None:
        """Test that a fast-rising foot is not pulled down."""
        result = ground_reaction([0.0, 0.0, -0.001], [0.0, 0.0, 1.0], ground)
        assert result.in_contact
        assert result.normal == 0.0

    def test_continuous_at_boundary(self, ground) -> None:
        """Test that the normal force vanishes from both sides of z = 0."""
        below = ground_reaction([0.0, 0.0, -1e-12], [0.0, 0.0, 0.0], ground).normal
        above = ground_reaction([0.0, 0.0, 1e-12], [0.0, 0.0, 0.0], ground).normal
        assert below == pytest.approx(0.0, abs=1e-8)
        assert above == 0.0

    def test_raised_ground(self) -> None:
        """Test a support surface above z = 0."""
        ground = GroundParams(ground_height=0.1)
        assert ground_reaction([0.0, 0.0, 0.099], [0.0, 0.0, 0.0], ground).normal == pytest.approx(8.0)


class TestFriction:
    """Test Stribeck friction."""

    def test_no_sliding(self, ground) -> None:
        """Test that a resting foot gets no tangential force."""
        force = ground_reaction([0.0, 0.0, -0.001], [0.0, 0.0, 0.0], ground).force
        assert force[0] == 0.0 and force[1] == 0.0

    def test_coefficient_limits(self, ground) -> None:
        """Test the static and Coulomb limits of the coefficient."""
        assert stribeck_coefficient(1e-9, ground) == pytest.approx(0.6)
        assert stribeck_coefficient(1.0, ground) == pytest.approx(0.5)

    def test_coefficient_monotone(self, ground) -> None:
        """Test that the coefficient decreases with speed."""
        s = stribeck_coefficient(np.linspace(0.0, 0.1, 200), ground)
        assert np.all(np.diff(s) <= 0.0)

    def test_opposes_sliding(self, ground) -> None:
        """Test the friction direction and magnitude while sliding fast."""
        force = ground_reaction([0.0, 0.0, -0.001], [0.5, -0.5, 0.0], ground).force
        assert force[0] == pytest.approx(-0.5 * 8.0 - 0.8 * 0.5)
        assert force[1] == pytest.approx(0.5 * 8.0 + 0.8 * 0.5)

    def test_axes_mirror(self, ground) -> None:
        """Test that y friction mirrors x friction."""
        fx = ground_reaction([0.0, 0.0, -0.002], [0.013, 0.0, 0.0], ground).force[0]
        fy = ground_reaction([0.0, 0.0, -0.002], [0.0, 0.013, 0.0], ground).force[1]
        assert fx == fy

    def test_bounded_without_viscosity(self, rng) -> None:
        """Test |u_a| <= mu_s u_z when the viscous term is off."""
        ground = GroundParams(mu_v=0.0)
        velocities = rng.normal(scale=0.05, size=(500, 3))
        positions = np.zeros((500, 3))
        positions[:, 2] = -rng.uniform(0.0, 0.01, size=500)
        forces, _ = ground_forces(positions, velocities, ground)
        assert np.all(np.abs(forces[:, :2]) <= 0.6 * forces[:, 2:3] + 1e-12)


class TestNarrowPath:
    """Test the finite support strip."""

    def test_off_strip(self) -> None:
        """Test that a foot beside the strip gets no force."""
        ground = GroundParams(path_half_width=0.1)
        result = ground_reaction([0.0, 0.15, -0.01], [0.0, 0.0, 0.0], ground)
        assert not result.in_contact
        np.testing.assert_array_equal(result.force, np.zeros(3))

    def test_on_strip(self) -> None:
        """Test that a foot on the strip is supported."""
        ground = GroundParams(path_half_width=0.1)
        assert ground_reaction([0.0, -0.05, -0.001], [0.0, 0.0, 0.0], ground).in_contact


class TestBatched:
    """Test the batched ground model."""

    def test_shapes(self, ground) -> None:
        """Test batch shapes of forces and flags."""
        forces, contact = ground_forces(np.zeros((5, 4, 3)), np.zeros((5, 4, 3)), ground)
        assert forces.shape == (5, 4, 3)
        assert contact.shape == (5, 4)
        assert contact.all()

    def test_matches_single(self, ground, rng) -> None:
        """Test that batched and single-foot results agree."""
        positions = rng.normal(scale=0.01, size=(20, 3))
        velocities = rng.normal(scale=0.1, size=(20, 3))
        forces, contact = ground_forces(positions, velocities, ground)
        for p, v, f, c in zip(positions, velocities, forces, contact):
            single = ground_reaction(p, v, ground)
            np.testing.assert_array_equal(single.force, f)
            assert single.in_contact == c
