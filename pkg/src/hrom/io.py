"""
Trajectory export and import.

Trajectories are written as comma-separated text with one header row and
values printed with 17 significant digits, so reading a file back yields
bit-identical arrays. After the documented columns the leg inputs
(``<leg>_u_<joint>``) and contact flags (``<leg>_contact``) are appended to
make the round trip lossless.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from .exceptions import FormatError
from .model import JOINT_NAMES, LEG_IDS, RobotParams, foot_positions, foot_velocities
from .sim import Trajectory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"

BODY_COLUMNS: List[str] = ["px", "py", "pz", "yaw", "pitch", "roll"]
JOINT_COLUMNS: List[str] = [f"{leg}_{joint}" for leg in LEG_IDS for joint in JOINT_NAMES]
VELOCITY_COLUMNS: List[str] = ["vx", "vy", "vz", "wx", "wy", "wz"]
JOINT_RATE_COLUMNS: List[str] = [f"{leg}_{joint}_dot" for leg in LEG_IDS for joint in JOINT_NAMES]
GRF_COLUMNS: List[str] = [f"{leg}_grf_{axis}" for leg in LEG_IDS for axis in "xyz"]
THRUSTER_COLUMNS: List[str] = ["f1", "f2", "f3", "f4"]
WRENCH_COLUMNS: List[str] = ["fx", "fy", "fz", "mx", "my", "mz"]
JOINT_INPUT_COLUMNS: List[str] = [f"{leg}_u_{joint}" for leg in LEG_IDS for joint in JOINT_NAMES]
CONTACT_COLUMNS: List[str] = [f"{leg}_contact" for leg in LEG_IDS]

TRAJECTORY_COLUMNS: List[str] = (
    ["t"]
    + BODY_COLUMNS
    + JOINT_COLUMNS
    + VELOCITY_COLUMNS
    + JOINT_RATE_COLUMNS
    + GRF_COLUMNS
    + THRUSTER_COLUMNS
    + WRENCH_COLUMNS
    + JOINT_INPUT_COLUMNS
    + CONTACT_COLUMNS
)


def _write_table(path: PathLike, columns: Sequence[str], table: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, table, fmt=FLOAT_FORMAT, delimiter=",", header=",".join(columns), comments="")
    logger.debug(f"Wrote {table.shape[0]} rows to {path}")
    return path


def trajectory_table(trajectory: Trajectory) -> np.ndarray:
    """Rows of :data:`TRAJECTORY_COLUMNS` for a trajectory."""
    n = len(trajectory)
    return np.hstack(
        [
            trajectory.times[:, None],
            trajectory.states,
            trajectory.ground_forces.reshape(n, 12),
            trajectory.thruster_forces,
            trajectory.controls,
            trajectory.contacts.astype(float),
        ]
    )


def write_trajectory(path: PathLike, trajectory: Trajectory) -> Path:
    """Write a trajectory CSV."""
    return _write_table(path, TRAJECTORY_COLUMNS, trajectory_table(trajectory))


def read_trajectory(path: PathLike) -> Trajectory:
    """
    Read a trajectory CSV written by :func:`write_trajectory`.

    Raises:
        FormatError: If the header or column count does not match
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            header = handle.readline().strip().split(",")
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise FormatError(f"cannot read {path}", cause=exc) from exc
    if header != TRAJECTORY_COLUMNS:
        raise FormatError(f"unexpected header in {path}")
    if table.shape[1] != len(TRAJECTORY_COLUMNS):
        raise FormatError(f"expected {len(TRAJECTORY_COLUMNS)} columns, got {table.shape[1]}")

    n = table.shape[0]
    cursor = 0

    def take(width: int) -> np.ndarray:
        nonlocal cursor
        block = table[:, cursor : cursor + width]
        cursor += width
        return block

    times = take(1)[:, 0]
    states = take(36)
    grf = take(12).reshape(n, 4, 3)
    fans = take(4)
    controls = take(18)
    contacts = take(4) > 0.5
    return Trajectory(
        times=times,
        states=states,
        controls=controls,
        ground_forces=grf,
        contacts=contacts,
        thruster_forces=fans,
    )


def solution_columns(state_dim: int, control_dim: int) -> List[str]:
    """Header of a solution table; robot-sized vectors get the trajectory names."""
    if (state_dim, control_dim) == (36, 18):
        states = BODY_COLUMNS + JOINT_COLUMNS + VELOCITY_COLUMNS + JOINT_RATE_COLUMNS
        controls = WRENCH_COLUMNS + JOINT_INPUT_COLUMNS
    else:
        states = [f"x{i}" for i in range(state_dim)]
        controls = [f"u{i}" for i in range(control_dim)]
    return ["t"] + states + controls


def write_solution(path: PathLike, times: np.ndarray, states: np.ndarray, controls: np.ndarray) -> Path:
    """Write optimized node states and controls."""
    states = np.atleast_2d(states)
    controls = np.atleast_2d(controls)
    columns = solution_columns(states.shape[1], controls.shape[1])
    return _write_table(path, columns, np.hstack([np.asarray(times)[:, None], states, controls]))


def write_plot_data(directory: PathLike, trajectory: Trajectory, robot: RobotParams) -> Dict[str, Path]:
    """
    Write the per-figure plot-data tables.

    Returns:
        Mapping of table name to written path
    """
    directory = Path(directory)
    n = len(trajectory)
    t = trajectory.times[:, None]
    x = trajectory.states
    feet = foot_positions(x, robot).reshape(n, 12)
    foot_rates = foot_velocities(x, robot).reshape(n, 12)
    foot_cols = [f"{leg}_foot_{axis}" for leg in LEG_IDS for axis in "xyz"]
    foot_rate_cols = [f"{leg}_foot_v{axis}" for leg in LEG_IDS for axis in "xyz"]

    tables = {
        "body_states": (
            ["t"] + BODY_COLUMNS + VELOCITY_COLUMNS,
            np.hstack([t, x[:, 0:6], x[:, 18:24]]),
        ),
        "joint_traj": (
            ["t"] + JOINT_COLUMNS + JOINT_RATE_COLUMNS + JOINT_INPUT_COLUMNS,
            np.hstack([t, x[:, 6:18], x[:, 24:36], trajectory.controls[:, 6:]]),
        ),
        "foot_states": (["t"] + foot_cols + foot_rate_cols, np.hstack([t, feet, foot_rates])),
        "grf": (
            ["t"] + GRF_COLUMNS + CONTACT_COLUMNS,
            np.hstack([t, trajectory.ground_forces.reshape(n, 12), trajectory.contacts.astype(float)]),
        ),
        "thruster_forces": (
            ["t"] + THRUSTER_COLUMNS + ["total"] + WRENCH_COLUMNS,
            np.hstack(
                [
                    t,
                    trajectory.thruster_forces,
                    trajectory.thruster_forces.sum(axis=1, keepdims=True),
                    trajectory.controls[:, :6],
                ]
            ),
        ),
    }
    return {name: _write_table(directory / f"{name}.csv", cols, table) for name, (cols, table) in tables.items()}


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    """Write a JSON sidecar with sorted keys for byte-stable output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_jsonable)
        handle.write("\n")
    return path


def read_json(path: PathLike) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
