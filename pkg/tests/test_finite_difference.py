"""
Unit tests for the central finite-difference helpers.
"""

import numpy as np
import pytest

from hrom.trajopt.finite_difference import (
    MIN_STEP,
    batched_jacobian,
    fd_steps,
    gradient,
    jacobian,
    richardson_gradient,
)


class TestSteps:
    """Test adaptive step sizes."""

    def test_floor_and_relative(self) -> None:
        """Test the absolute floor and the relative branch."""
        steps = fd_steps([0.0, 1.0, 1e3])
        np.testing.assert_allclose(steps, [MIN_STEP, MIN_STEP, 1e-4])


class TestGradient:
    """Test scalar gradients."""

    def test_quadratic(self) -> None:
        """Test the gradient of a quadratic form."""
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        fun = lambda y: 0.5 * y @ a @ y
        y = np.array([0.3, -1.2])
        np.testing.assert_allclose(gradient(fun, y), a @ y, atol=1e-8)

    def test_richardson(self) -> None:
        """Test the extrapolated gradient of a smooth function."""
        fun = lambda y: float(np.sin(y[0]) * np.exp(y[1]))
        y = np.array([0.4, 0.2])
        exact = [np.cos(0.4) * np.exp(0.2), np.sin(0.4) * np.exp(0.2)]
        np.testing.assert_allclose(richardson_gradient(fun, y), exact, atol=1e-8)

    def test_input_untouched(self) -> None:
        """Test that the evaluation point is restored."""
        y = np.array([1.0, 2.0])
        gradient(lambda v: float(v.sum()), y)
        np.testing.assert_array_equal(y, [1.0, 2.0])


class TestJacobian:
    """Test vector Jacobians."""

    def test_linear_map(self, rng) -> None:
        """Test that a linear map returns its matrix."""
        a = rng.normal(size=(3, 4))
        np.testing.assert_allclose(jacobian(lambda y: a @ y, rng.normal(size=4)), a, atol=1e-8)

    def test_batched(self, rng) -> None:
        """Test stacked Jacobians of a time-varying vector field."""

        def f(t, x, u):
            return np.stack([x[:, 1] * t, -np.sin(x[:, 0]) + u[:, 0]], axis=-1)

        t = np.array([0.5, 1.0, 2.0])
        x = rng.normal(size=(3, 2))
        u = rng.normal(size=(3, 1))
        jac = batched_jacobian(f, t, x, u)
        assert jac.shape == (3, 2, 3)
        for k in range(3):
            expected = np.array([[0.0, t[k], 0.0], [-np.cos(x[k, 0]), 0.0, 1.0]])
            np.testing.assert_allclose(jac[k], expected, atol=1e-8)

    def test_batched_matches_single(self, rng) -> None:
        """Test agreement with the per-point Jacobian."""
        a = rng.normal(size=(2, 3))

        def f(t, x, u):
            z = np.concatenate([x, u], axis=-1)
            return np.tanh(z @ a.T) * t[:, None]

        t = np.array([1.0, 3.0])
        x, u = rng.normal(size=(2, 2)), rng.normal(size=(2, 1))
        jac = batched_jacobian(f, t, x, u)
        for k in range(2):
            single = jacobian(lambda z: np.tanh(a @ z) * t[k], np.concatenate([x[k], u[k]]))
            np.testing.assert_allclose(jac[k], single, atol=1e-8)

    @pytest.mark.parametrize("size", [1, 5])
    def test_shape(self, size) -> None:
        """Test the output shape for different inputs."""
        assert jacobian(lambda y: np.array([y.sum(), 0.0]), np.zeros(size)).shape == (2, size)
