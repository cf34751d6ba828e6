"""
Unit tests for custom exceptions.

Tests the exception hierarchy to ensure proper error handling
and cause tracking.
"""

import pytest

from hrom.exceptions import (
    ActuationError,
    BoundsViolation,
    ConfigError,
    Degenerate,
    DegenerateInterval,
    DomainError,
    FormatError,
    GaitError,
    HromError,
    Infeasible,
    IntegrationError,
    KinematicsError,
    LineSearchFail,
    MaxIter,
    NearSingular,
    NonFinite,
    OutOfRange,
    SolverError,
    SolverNonFinite,
    TooShort,
    Unreachable,
)


class TestHromError:
    """Test base HromError class."""

    def test_basic_creation(self) -> None:
        """Test creating basic HromError."""
        error = HromError("Test error message")
        assert str(error) == "Test error message"
        assert error.message == "Test error message"
        assert error.cause is None

    def test_with_cause(self) -> None:
        """Test creating HromError with cause."""
        original_error = ValueError("Original error")
        error = HromError("Test error message", cause=original_error)
        assert error.message == "Test error message"
        assert error.cause is original_error


class TestCategoryPrefixes:
    """Test the category prefix each family adds to its messages."""

    @pytest.mark.parametrize(
        "cls, prefix",
        [
            (KinematicsError, "Kinematics error"),
            (Unreachable, "Kinematics error"),
            (Degenerate, "Kinematics error"),
            (ActuationError, "Actuation error"),
            (BoundsViolation, "Actuation error"),
            (DomainError, "Domain error"),
            (OutOfRange, "Domain error"),
            (DegenerateInterval, "Domain error"),
            (TooShort, "Domain error"),
            (GaitError, "Gait error"),
            (Infeasible, "Gait error"),
            (IntegrationError, "Integration error"),
            (NonFinite, "Integration error"),
            (FormatError, "Format error"),
        ],
    )
    def test_prefix(self, cls, prefix) -> None:
        """Test that the message carries the family prefix."""
        error = cls("something failed")
        assert error.message == f"{prefix}: something failed"
        assert isinstance(error, HromError)

    def test_cause_is_kept(self) -> None:
        """Test that subclasses keep the cause."""
        original = OSError("disk gone")
        error = FormatError("cannot read", cause=original)
        assert error.cause is original


class TestNearSingular:
    """Test NearSingular class."""

    def test_with_pitch(self) -> None:
        """Test that the offending pitch is reported."""
        error = NearSingular("Euler-rate map singular", pitch=1.5)
        assert "pitch: 1.500000 rad" in str(error)
        assert error.pitch == 1.5
        assert isinstance(error, KinematicsError)

    def test_without_pitch(self) -> None:
        """Test creating NearSingular without a pitch."""
        error = NearSingular("singular")
        assert error.pitch is None
        assert "pitch" not in str(error)


class TestSolverError:
    """Test the solver exception family."""

    @pytest.mark.parametrize("cls", [MaxIter, LineSearchFail, SolverNonFinite])
    def test_best_iterate_travels(self, cls) -> None:
        """Test that the best iterate is attached to the exception."""
        error = cls("stopped", best=("y", "report"))
        assert error.best == ("y", "report")
        assert "Solver error: stopped" in str(error)
        assert isinstance(error, SolverError)

    def test_best_defaults_to_none(self) -> None:
        """Test that best is optional."""
        assert SolverError("stopped").best is None


class TestConfigError:
    """Test ConfigError class."""

    def test_with_key(self) -> None:
        """Test that the offending key is named."""
        error = ConfigError("unknown key", key="gait.v_ref")
        assert str(error) == "Config error: unknown key (key: gait.v_ref)"
        assert error.key == "gait.v_ref"

    def test_without_key(self) -> None:
        """Test creating ConfigError without a key."""
        error = ConfigError("bad file")
        assert error.key is None
        assert error.message == "Config error: bad file"


class TestExceptionHierarchy:
    """Test exception inheritance hierarchy."""

    def test_catch_all(self) -> None:
        """Test that every error can be caught as HromError."""
        for cls in (Unreachable, BoundsViolation, OutOfRange, Infeasible, NonFinite, MaxIter, FormatError):
            with pytest.raises(HromError):
                raise cls("boom")

    def test_families_are_disjoint(self) -> None:
        """Test that unrelated families do not catch each other."""
        with pytest.raises(DomainError):
            try:
                raise TooShort("short")
            except KinematicsError:
                pytest.fail("TooShort must not be a KinematicsError")
