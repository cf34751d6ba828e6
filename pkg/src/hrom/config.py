"""
Run configuration.

Configurations are sectioned ``key = value`` files read with
:mod:`configparser`. Vector values are comma-separated numbers; units are
SI and suffixed in the key names. Unknown sections and keys are rejected
with a :class:`ConfigError` naming the key.

Example::

    [gait]
    v_ref_mps = 0.1
    duration_s = 3.5

    [sim]
    kp_att = 60, 60, 30
"""

import configparser
import logging
import os
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from .contact import GroundParams
from .exceptions import ConfigError
from .gait import GaitParams, TrackingGains
from .model import EulerAngles, RobotParams
from .sim import SimConfig, initial_state
from .trajopt.problems import OptConfig

logger = logging.getLogger(__name__)

OUT_DIR_ENV = "HROM_OUT_DIR"
DEFAULT_OUT_DIR = "hrom-out"

Parser = Callable[[str], Any]


def _numbers(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(";", ",").split(",") if v.strip()], dtype=float)


def _vector(size: int) -> Parser:
    def parse(text: str) -> np.ndarray:
        values = _numbers(text)
        if values.size != size:
            raise ValueError(f"expected {size} numbers, got {values.size}")
        return values

    return parse


def _profile(text: str) -> Tuple[float, ...]:
    return tuple(_vector(7)(text).tolist())


def _matrix3(text: str) -> np.ndarray:
    values = _numbers(text)
    if values.size == 3:
        return np.diag(values)
    if values.size == 9:
        return values.reshape(3, 3)
    raise ValueError("expected 3 diagonal entries or 9 row-major entries")


def _points4(text: str) -> np.ndarray:
    return _vector(12)(text).reshape(4, 3)


def _pair(text: str) -> Tuple[float, float]:
    lo, hi = _vector(2)(text)
    return float(lo), float(hi)


def _gains(text: str) -> Tuple[float, ...]:
    values = _numbers(text)
    if values.size not in (1, 3):
        raise ValueError("expected 1 or 3 gains")
    return tuple(np.broadcast_to(values, (3,)).tolist())


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(_numbers(text).tolist())


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _words(text: str) -> Tuple[str, ...]:
    return tuple(w.strip() for w in text.split(",") if w.strip())


def _word(text: str) -> str:
    return text.strip()


def _int(text: str) -> int:
    return int(text.strip())


# section -> key -> (field name, parser)
SCHEMA: Dict[str, Dict[str, Tuple[str, Parser]]] = {
    "robot": {
        "mass_kg": ("mass", float),
        "inertia_kgm2": ("inertia", _matrix3),
        "hip_offsets_m": ("hip_offsets", _points4),
        "thruster_positions_m": ("thruster_positions", _points4),
        "thruster_axis": ("thruster_axis", _vector(3)),
        "max_thrust_per_edf_n": ("max_thrust_per_edf", float),
        "thrust_budget_n": ("thrust_budget", float),
        "leg_length_limits_m": ("leg_length_limits", _pair),
        "gravity_mps2": ("gravity", _vector(3)),
        "eps_pitch_rad": ("eps_pitch", float),
    },
    "ground": {
        "k_gz_npm": ("k_gz", float),
        "k_dz_nspm": ("k_dz", float),
        "mu_c": ("mu_c", float),
        "mu_s": ("mu_s", float),
        "mu_v": ("mu_v", float),
        "v_s_mps": ("v_s", float),
        "path_half_width_m": ("path_half_width", float),
        "ground_height_m": ("ground_height", float),
    },
    "gait": {
        "v_ref_mps": ("forward_velocity_ref", float),
        "step_time_s": ("step_time", float),
        "pause_s": ("pause_time", float),
        "step_height_m": ("step_height", float),
        "stance_y_offset_m": ("stance_y_offset", float),
        "duration_s": ("duration", float),
        "step_length_m": ("step_length", float),
        "transient_s": ("transient_time", float),
        "swing_bow_m": ("swing_bow", float),
        "stand_length_m": ("stand_length", float),
        "swing_x_profile": ("x_profile", _profile),
        "swing_y_profile": ("y_profile", _profile),
        "swing_z_profile": ("z_profile", _profile),
    },
    "sim": {
        "dt_s": ("dt", float),
        "duration_s": ("duration", float),
        "kp_att": ("kp_att", _gains),
        "kd_att": ("kd_att", _gains),
        "ref_attitude_rad": ("reference_attitude", _vector(3)),
        "thrust_fraction": ("thrust_fraction", float),
        "thrust_enabled": ("thrust_enabled", _bool),
        "kp_joint": ("kp", float),
        "kd_joint": ("kd", float),
        "initial_height_m": ("initial_height", float),
    },
    "opt": {
        "problem": ("problem", _word),
        "n": ("n", _int),
        "tol_c": ("tol_c", float),
        "tol_g": ("tol_g", float),
        "max_iter": ("max_iter", _int),
        "inner_max_iter": ("inner_max_iter", _int),
        "tf_bounds_s": ("tf_bounds", _pair),
        "penalize": ("penalize", _word),
        "free_joint_inputs": ("free_joint_inputs", _bool),
        "q_weights": ("q_weights", _floats),
        "r_weights": ("r_weights", _floats),
        "boundary": ("boundary", _words),
    },
    "run": {
        "output_dir": ("output_dir", _word),
        "seed": ("seed", _int),
    },
}

Overrides = Mapping[str, Mapping[str, Any]]


@dataclass(frozen=True, eq=False)
class RunConfig:
    """
    Everything a command needs, parsed and validated.

    ``values`` keeps the effective ``key = value`` text per section (file
    contents merged with command-line overrides) for the metadata echo.
    """

    robot: RobotParams = field(default_factory=RobotParams)
    ground: GroundParams = field(default_factory=GroundParams)
    gait: GaitParams = field(default_factory=GaitParams)
    sim: SimConfig = field(default_factory=SimConfig)
    opt: OptConfig = field(default_factory=OptConfig)
    output_dir: Optional[str] = None
    seed: int = 0
    source: Optional[str] = None
    values: Dict[str, Dict[str, str]] = field(default_factory=dict)

    def resolve_output_dir(self, override: Optional[str] = None) -> Path:
        """``--out`` beats ``[run] output_dir``, which beats ``HROM_OUT_DIR``."""
        chosen = override or self.output_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR
        return Path(chosen)

    def echo(self) -> Dict[str, Any]:
        """Effective configuration for the metadata sidecar."""
        return {
            "source": self.source,
            "values": {section: dict(items) for section, items in self.values.items()},
            "effective": {
                "robot": _describe(self.robot),
                "ground": _describe(self.ground),
                "gait": _describe(self.gait),
                "sim": _describe(self.sim),
                "opt": _describe(self.opt),
                "output_dir": self.output_dir,
                "seed": self.seed,
            },
        }


def _describe(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _describe(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, list)):
        return [_describe(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def _read(path: Union[str, Path]) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}", cause=exc) from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}", cause=exc) from exc
    return parser


def _collect(parser: Optional[configparser.ConfigParser], overrides: Optional[Overrides]) -> Dict[str, Dict[str, str]]:
    values: Dict[str, Dict[str, str]] = {section: {} for section in SCHEMA}
    sources = []
    if parser is not None:
        sources.extend((section, dict(parser.items(section))) for section in parser.sections())
    if overrides:
        sources.extend((section, {k: str(v) for k, v in items.items()}) for section, items in overrides.items())
    for section, items in sources:
        if section not in SCHEMA:
            raise ConfigError("unknown section", key=section)
        for key, text in items.items():
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", key=f"{section}.{key}")
            values[section][key] = text
    return values


def _parse(values: Dict[str, Dict[str, str]]) -> Dict[str, Dict[str, Any]]:
    parsed: Dict[str, Dict[str, Any]] = {}
    for section, items in values.items():
        parsed[section] = {}
        for key, text in items.items():
            name, parse = SCHEMA[section][key]
            try:
                parsed[section][name] = parse(text)
            except ValueError as exc:
                raise ConfigError(f"invalid value {text!r}: {exc}", key=f"{section}.{key}", cause=exc) from exc
    return parsed


def _build(section: str, factory: Callable[..., Any], kwargs: Dict[str, Any]) -> Any:
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{section}] settings: {exc}", key=section, cause=exc) from exc


def build_config(values: Dict[str, Dict[str, str]], source: Optional[str] = None) -> RunConfig:
    """
    Validate raw ``key = value`` text and assemble a :class:`RunConfig`.

    Raises:
        ConfigError: On unknown keys, unparsable values or invalid settings
    """
    parsed = _parse(values)
    robot = _build("robot", RobotParams, parsed["robot"])
    ground = _build("ground", GroundParams, parsed["ground"])
    gait = _build("gait", GaitParams, parsed["gait"])

    sim_kwargs = dict(parsed["sim"])
    tracking = _build(
        "sim", TrackingGains, {k: sim_kwargs.pop(k) for k in ("kp", "kd") if k in sim_kwargs}
    )
    if "reference_attitude" in sim_kwargs:
        sim_kwargs["reference_attitude"] = EulerAngles.from_array(sim_kwargs["reference_attitude"])
    sim_kwargs.setdefault("duration", gait.duration)
    height = sim_kwargs.pop("initial_height", None)
    if height is not None:
        sim_kwargs["initial_state"] = initial_state(robot, ground, stand_length=gait.stand_length, height=height)
    sim = _build("sim", SimConfig, {**sim_kwargs, "tracking": tracking})

    opt = _build("opt", OptConfig, parsed["opt"])
    run = parsed["run"]
    return RunConfig(
        robot=robot,
        ground=ground,
        gait=gait,
        sim=sim,
        opt=opt,
        output_dir=run.get("output_dir"),
        seed=run.get("seed", 0),
        source=source,
        values={section: dict(items) for section, items in values.items() if items},
    )


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Overrides] = None) -> RunConfig:
    """
    Load a run configuration file and apply overrides.

    Args:
        path: Config file, or None for defaults
        overrides: ``{section: {key: value}}`` applied after the file

    Raises:
        ConfigError: If the file is unreadable or invalid
    """
    parser = _read(path) if path is not None else None
    config = build_config(_collect(parser, overrides), source=str(path) if path is not None else None)
    logger.debug(f"Loaded configuration from {path or 'defaults'}")
    return config


def bundled_config(name: str) -> Path:
    """Path of a configuration shipped with the package."""
    path = Path(__file__).parent / "configs" / name
    if not path.exists():
        raise ConfigError("no such bundled config", key=name)
    return path
