"""
Compliant ground and Stribeck friction.

Each foot that penetrates the support surface receives a spring-damper
normal force and a velocity-dependent tangential friction force. The
support is a flat strip of half-width ``path_half_width`` centred on the
inertial x axis; an infinite half-width gives the usual plane.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .model import ArrayLike


@dataclass(frozen=True)
class GroundParams:
    """
    Ground contact constants.

    Attributes:
        k_gz: Normal stiffness in N/m
        k_dz: Normal damping in N*s/m
        mu_c: Coulomb friction coefficient
        mu_s: Static friction coefficient
        mu_v: Viscous friction coefficient in N*s/m
        v_s: Stribeck velocity in m/s
        path_half_width: Half-width of the support strip in meters
        ground_height: Height of the support surface in meters
    """

    k_gz: float = 8000.0
    k_dz: float = 250.0
    mu_c: float = 0.5
    mu_s: float = 0.6
    mu_v: float = 0.8
    v_s: float = 0.01
    path_half_width: float = math.inf
    ground_height: float = 0.0

    def __post_init__(self) -> None:
        """Validate ground constants after initialization."""
        if not self.k_gz > 0.0:
            raise ValueError("k_gz must be positive")
        if not self.k_dz > 0.0:
            raise ValueError("k_dz must be positive")
        if not self.v_s > 0.0:
            raise ValueError("v_s must be positive")
        if not self.mu_s >= self.mu_c >= 0.0:
            raise ValueError("friction coefficients must satisfy mu_s >= mu_c >= 0")
        if not self.mu_v >= 0.0:
            raise ValueError("mu_v must be non-negative")
        if not self.path_half_width > 0.0:
            raise ValueError("path_half_width must be positive")
        if not math.isfinite(self.ground_height):
            raise ValueError("ground_height must be finite")


@dataclass(frozen=True, eq=False)
class GroundForce:
    """Ground reaction force on one foot (inertial frame)."""

    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    in_contact: bool = False

    def __post_init__(self) -> None:
        force = np.array(self.force, dtype=float)
        if force.shape != (3,):
            raise ValueError("force must have shape (3,)")
        if not self.in_contact and np.any(force != 0.0):
            raise ValueError("force must be zero when the foot is not in contact")
        force.setflags(write=False)
        object.__setattr__(self, "force", force)
        object.__setattr__(self, "in_contact", bool(self.in_contact))

    @property
    def normal(self) -> float:
        """Normal (z) component in newtons."""
        return float(self.force[2])


def stribeck_coefficient(speed: ArrayLike, params: GroundParams) -> np.ndarray:
    """Friction coefficient ``mu_c - (mu_c - mu_s) exp(-|v|^2 / v_s^2)``."""
    v = np.asarray(speed, dtype=float)
    return params.mu_c - (params.mu_c - params.mu_s) * np.exp(-(v * v) / (params.v_s * params.v_s))


def ground_forces(
    foot_pos: ArrayLike,
    foot_vel: ArrayLike,
    params: GroundParams,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the ground model for any number of feet.

    Args:
        foot_pos: World positions ``(..., 3)``
        foot_vel: World velocities ``(..., 3)``
        params: Ground constants

    Returns:
        Tuple of forces ``(..., 3)`` and contact flags ``(...)``
    """
    p = np.asarray(foot_pos, dtype=float)
    v = np.asarray(foot_vel, dtype=float)
    z = p[..., 2] - params.ground_height
    in_contact = (z <= 0.0) & (np.abs(p[..., 1]) <= params.path_half_width)

    # Springs don't pull: the normal force is clamped at zero
    normal = np.maximum(0.0, -params.k_gz * z - params.k_dz * v[..., 2])
    tangential = v[..., :2]
    s = stribeck_coefficient(tangential, params)
    friction = -s * normal[..., None] * np.sign(tangential) - params.mu_v * tangential

    force = np.concatenate([friction, normal[..., None]], axis=-1)
    force = np.where(in_contact[..., None], force, 0.0)
    return force, in_contact


def ground_reaction(foot_pos: ArrayLike, foot_vel: ArrayLike, params: GroundParams) -> GroundForce:
    """
    Ground reaction force on a single foot.

    Airborne feet (``z > ground_height``) and feet off the strip receive
    exactly zero force.
    """
    force, in_contact = ground_forces(foot_pos, foot_vel, params)
    return GroundForce(force=force, in_contact=bool(in_contact))
