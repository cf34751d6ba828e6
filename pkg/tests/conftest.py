"""
Pytest configuration for hrom tests.

This file contains shared fixtures and configuration
for all tests in the project.
"""

import numpy as np
import pytest

from hrom.contact import GroundParams
from hrom.gait import GaitParams, build_gait
from hrom.model import FullState, RobotParams, default_state


@pytest.fixture
def robot() -> RobotParams:
    """Robot with the default placeholder parameters."""
    return RobotParams()


@pytest.fixture
def ground() -> GroundParams:
    """Ground with the default contact constants."""
    return GroundParams()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def gait_params() -> GaitParams:
    """Default diagonal walk."""
    return GaitParams()


@pytest.fixture
def gait(gait_params, robot):
    """Gait plan of the default walk."""
    return build_gait(gait_params, robot)


@pytest.fixture
def standing_gait(robot):
    """Gait that holds the feet still for its whole horizon."""
    return build_gait(
        GaitParams(forward_velocity_ref=0.0, stance_y_offset=0.0, duration=1.0, transient_time=1.0),
        robot,
    )


@pytest.fixture
def level_state() -> FullState:
    """Level body 0.3 m up on straight 0.3 m legs."""
    return default_state()


@pytest.fixture
def random_state(rng) -> np.ndarray:
    """Flat state with random pose, joints and velocities."""
    x = np.zeros(36)
    x[0:3] = rng.normal(size=3)
    x[3:6] = rng.uniform([-np.pi, -0.6, -0.6], [np.pi, 0.6, 0.6])
    x[6:18] = rng.uniform([-0.4, -0.3, 0.2], [0.4, 0.3, 0.4], size=(4, 3)).reshape(-1)
    x[18:36] = rng.normal(scale=0.3, size=18)
    return x


@pytest.fixture
def config_file(tmp_path):
    """Write a configuration file and return its path."""

    def _write(text: str, name: str = "run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
