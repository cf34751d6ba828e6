"""
Custom exceptions for hrom.

This module defines the exception hierarchy used throughout
the library for error handling and debugging.
"""

from typing import Any, Optional


class HromError(Exception):
    """Base exception for all hrom errors."""

    def __init__(self, message: str, cause: Optional[Exception] = None) -> None:
        super().__init__(message)
        self.message = message
        self.cause = cause


class KinematicsError(HromError):
    """Raised when a kinematic map cannot be evaluated."""

    def __init__(self, message: str, cause: Optional[Exception] = None) -> None:
        super().__init__(f"Kinematics error: {message}", cause)


class NearSingular(KinematicsError):
    """Raised when the Euler-rate map is inverted too close to gimbal lock."""

    def __init__(self, message: str, pitch: Optional[float] = None) -> None:
        if pitch is not None:
            message = f"{message} (pitch: {pitch:.6f} rad)"
        super().__init__(message)
        self.pitch = pitch


class Unreachable(KinematicsError):
    """Raised when a foot target lies outside the leg-length limits."""


class Degenerate(KinematicsError):
    """Raised when a foot target is too close to the hip to invert."""


class ActuationError(HromError):
    """Raised when an actuator command is inadmissible."""

    def __init__(self, message: str, cause: Optional[Exception] = None) -> None:
        super().__init__(f"Actuation error: {message}", cause)


class BoundsViolation(ActuationError):
    """Raised when a thruster force leaves [0, max_thrust_per_edf]."""


class DomainError(HromError):
    """Raised when an argument lies outside the domain of an operation."""

    def __init__(self, message: str, cause: Optional[Exception] = None) -> None:
        super().__init__(f"Domain error: {message}", cause)


class OutOfRange(DomainError):
    """Raised when a curve parameter or time leaves its interval."""


class DegenerateInterval(DomainError):
    """Raised when an interpolation interval has non-positive length."""


class TooShort(DomainError):
    """Raised when a trajectory does not cover the requested horizon."""


class GaitError(HromError):
    """Raised when a gait cannot be generated."""

    def __init__(self, message: str, cause: Optional[Exception] = None) -> None:
        super().__init__(f"Gait error: {message}", cause)


class Infeasible(GaitError):
    """Raised when a gait requires foot targets the legs cannot reach."""


class IntegrationError(HromError):
    """Raised when time marching fails."""

    def __init__(self, message: str, cause: Optional[Exception] = None) -> None:
        super().__init__(f"Integration error: {message}", cause)


class NonFinite(IntegrationError):
    """Raised when a state leaves the finite floating-point range."""


class SolverError(HromError):
    """
    Raised when the NLP solver stops without meeting its tolerances.

    The best iterate found so far travels with the exception so callers
    can still write it out.
    """

    def __init__(self, message: str, best: Any = None, cause: Optional[Exception] = None) -> None:
        super().__init__(f"Solver error: {message}", cause)
        self.best = best


class MaxIter(SolverError):
    """Raised when the outer iteration cap is reached."""


class LineSearchFail(SolverError):
    """Raised when the inner minimization cannot make progress."""


class SolverNonFinite(SolverError):
    """Raised when the merit function evaluates to a non-finite value."""


class ConfigError(HromError):
    """Raised when a run configuration cannot be loaded or validated."""

    def __init__(self, message: str, key: Optional[str] = None, cause: Optional[Exception] = None) -> None:
        if key is not None:
            message = f"{message} (key: {key})"
        super().__init__(f"Config error: {message}", cause)
        self.key = key


class FormatError(HromError):
    """Raised when an input file does not follow the expected layout."""

    def __init__(self, message: str, cause: Optional[Exception] = None) -> None:
        super().__init__(f"Format error: {message}", cause)
