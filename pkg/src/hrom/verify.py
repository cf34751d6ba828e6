"""
Acceptance suite behind ``hrom verify``.

Checks are grouped by suite and registered with :func:`check`. Each check
returns ``(passed, detail)``; a check that raises counts as a failure and
its exception text becomes the detail.
"""

import logging
import tempfile
import time
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .config import RunConfig, bundled_config, load_config
from .contact import GroundParams, ground_reaction
from .dynamics import Wrench, wrench_allocation
from .exceptions import ConfigError, HromError
from .gait import GaitParams, GaitPlan, build_gait
from .io import write_trajectory
from .model import (
    ANGULAR_VELOCITY,
    EULER,
    JOINTS,
    KGF,
    LEG_IDS,
    LINEAR_VELOCITY,
    POSITION,
    BodyPose,
    EulerAngles,
    FullState,
    LegJoints,
    RobotParams,
    foot_jacobian,
    foot_positions,
    kinetic_energy,
    leg_inverse_kinematics,
    leg_vector,
    rotation_to_euler,
)
from .sim import SimConfig, Trajectory, angular_momentum, compute_metrics, initial_state, simulate, total_energy
from .trajopt.collocation import CollocationProgram, DecisionVector, defects, nlp_solve
from .trajopt.interpolation import state_interp
from .trajopt.problems import double_integrator_problem, hrom_problem

logger = logging.getLogger(__name__)

CheckFunction = Callable[["VerifyContext"], Tuple[bool, str]]


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    func: CheckFunction
    slow: bool = False


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str
    seconds: float


CHECKS: List[Check] = []


def check(suite: str, name: str, slow: bool = False) -> Callable[[CheckFunction], CheckFunction]:
    """Register an acceptance check."""

    def register(func: CheckFunction) -> CheckFunction:
        CHECKS.append(Check(suite, name, func, slow))
        return func

    return register


class VerifyContext:
    """
    Shared inputs of the checks.

    Without a config path the bundled walking configuration is used. A
    config that fails to load makes every check depending on it fail.
    Random checks draw from ``seed``, which defaults to the config's
    ``[run] seed`` (0 when the config does not load).
    """

    def __init__(self, config_path: Optional[str] = None, seed: Optional[int] = None) -> None:
        self.config_path = config_path
        self.seed = seed

    @cached_property
    def _loaded(self) -> Tuple[Optional[RunConfig], Optional[ConfigError]]:
        try:
            return load_config(self.config_path or bundled_config("paper_walk.cfg")), None
        except ConfigError as exc:
            return None, exc

    @property
    def config(self) -> RunConfig:
        config, error = self._loaded
        if error is not None:
            raise error
        return config

    def rng(self) -> np.random.Generator:
        seed = self.seed
        if seed is None:
            config, _ = self._loaded
            seed = config.seed if config is not None else 0
        return np.random.default_rng(seed)

    @cached_property
    def gait(self) -> GaitPlan:
        return build_gait(self.config.gait, self.config.robot)

    @cached_property
    def walk(self) -> Tuple[Trajectory, float]:
        cfg = self.config
        start = time.perf_counter()
        trajectory = simulate(cfg.sim, self.gait, cfg.robot, cfg.ground)
        return trajectory, time.perf_counter() - start


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


@check("contact", "grf_formula")
def _grf_formula(ctx: VerifyContext) -> Tuple[bool, str]:
    ground = ctx.config.ground
    pressed = ground_reaction([0.0, 0.0, ground.ground_height - 1e-3], [0.0, 0.0, 0.0], ground)
    airborne = ground_reaction([0.0, 0.0, ground.ground_height + 1e-3], [0.1, 0.0, -0.5], ground)
    ok = abs(pressed.normal - 8.0) <= 1e-12 and not np.any(airborne.force) and not airborne.in_contact
    return ok, f"u_z={pressed.normal!r} N, airborne={airborne.force.tolist()}"


@check("contact", "friction_opposes_slip")
def _friction_direction(ctx: VerifyContext) -> Tuple[bool, str]:
    ground = ctx.config.ground
    f = ground_reaction([0.0, 0.0, ground.ground_height - 1e-3], [0.05, -0.02, 0.0], ground).force
    return bool(f[0] < 0.0 and f[1] > 0.0), f"tangential={f[:2].tolist()}"


@check("kinematics", "fk_ik_roundtrip")
def _fk_ik(ctx: VerifyContext) -> Tuple[bool, str]:
    rng = ctx.rng()
    lo, hi = ctx.config.robot.leg_length_limits
    directions = rng.normal(size=(1000, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    lengths = rng.uniform(lo + 1e-6, hi - 1e-6, size=(1000, 1))
    targets = directions * lengths
    error = float(np.max(np.abs(leg_vector(leg_inverse_kinematics(targets, (lo, hi))) - targets)))
    return error < 1e-10, f"max error {error:.2e} m"


def foot_jacobian_error(robot: RobotParams, rng: np.random.Generator, eps: float = 1e-6) -> float:
    """Worst relative error of the analytic foot Jacobian against central differences."""
    worst = 0.0
    for _ in range(20):
        angles = rng.uniform([-np.pi, -0.8, -0.8], [np.pi, 0.8, 0.8])
        pose = BodyPose(position=rng.normal(size=3), orientation=EulerAngles.from_array(angles))
        joints = rng.uniform([-0.5, -0.4, 0.1], [0.5, 0.4, 0.45], size=(4, 3))
        legs = LegJoints(positions=joints)
        v = rng.normal(size=6)
        rotation = pose.rotation
        for i, leg_id in enumerate(LEG_IDS):
            samples = []
            for sign in (1.0, -1.0):
                r = rotation @ Rotation.from_rotvec(sign * eps * v[3:]).as_matrix()
                x = np.zeros(36)
                x[POSITION] = pose.position + sign * eps * v[:3]
                x[EULER] = rotation_to_euler(r)
                x[JOINTS] = legs.positions.reshape(-1)
                samples.append(foot_positions(x, robot)[i])
            numeric = (samples[0] - samples[1]) / (2.0 * eps)
            analytic = foot_jacobian(pose, robot, legs, leg_id) @ v
            worst = max(worst, float(np.linalg.norm(numeric - analytic) / max(np.linalg.norm(analytic), 1e-12)))
    return worst


@check("kinematics", "foot_jacobian")
def _foot_jacobian(ctx: VerifyContext) -> Tuple[bool, str]:
    error = foot_jacobian_error(ctx.config.robot, ctx.rng())
    return error < 1e-6, f"max relative error {error:.2e}"


def tumble(
    robot: RobotParams,
    duration: float = 1.0,
    dt: float = 1e-3,
    angular_velocity: Tuple[float, float, float] = (0.1, 0.1, 2.0),
) -> Trajectory:
    """
    Torque-free, contact-free spin of the body far above the ground.

    The default spin is mostly about body z, the major axis, so the pitch
    stays small for the whole second. A fast spin about body y, the
    intermediate axis, such as ``(0.1, 2.0, 0.1)`` drives the pitch into the
    Euler-rate guard near ``acos(eps_pitch)`` after about 0.7 s and the run
    aborts there; energy is still conserved up to the abort.
    """
    ground = GroundParams()
    gait = build_gait(GaitParams(forward_velocity_ref=0.0, duration=duration, transient_time=duration), robot)
    start = initial_state(robot, ground, height=100.0).flatten()
    start[LINEAR_VELOCITY] = [0.3, -0.2, 1.0]
    start[ANGULAR_VELOCITY] = angular_velocity
    config = SimConfig(dt=dt, duration=duration, thrust_enabled=False, initial_state=FullState.unflatten(start))
    return simulate(config, gait, robot, ground)


@check("dynamics", "energy_conservation")
def _energy(ctx: VerifyContext) -> Tuple[bool, str]:
    robot = ctx.config.robot
    trajectory = tumble(robot)
    energy = total_energy(trajectory, robot)
    momentum = angular_momentum(trajectory, robot)
    scale = float(kinetic_energy(trajectory.states[0], robot))
    drift_e = float(np.max(np.abs(energy - energy[0])) / scale)
    drift_h = float(np.max(np.abs(momentum - momentum[0])) / momentum[0])
    return drift_e < 1e-6 and drift_h < 1e-6, f"energy drift {drift_e:.2e}, |I w| drift {drift_h:.2e}"


@check("interpolation", "hermite_endpoints")
def _hermite_endpoints(ctx: VerifyContext) -> Tuple[bool, str]:
    rng = ctx.rng()
    worst = 0.0
    for _ in range(100):
        xj, xk, fj, fk = rng.normal(size=(4, 5))
        tj = float(rng.uniform(-1.0, 1.0))
        tk = tj + float(rng.uniform(0.1, 2.0))
        a, da = state_interp(xj, xk, fj, fk, tj, tk, tj)
        b, db = state_interp(xj, xk, fj, fk, tj, tk, tk)
        worst = max(worst, *(float(np.max(np.abs(e))) for e in (a - xj, b - xk, da - fj, db - fk)))
    return worst < 1e-12, f"max endpoint error {worst:.2e}"


@check("interpolation", "cubic_exactness")
def _cubic_exact(ctx: VerifyContext) -> Tuple[bool, str]:
    coeffs = np.array([0.3, -1.2, 0.7, 2.5])
    p = np.polynomial.Polynomial(coeffs)
    dp = p.deriv()
    tj, tk = 0.2, 1.4
    worst = 0.0
    for t in np.linspace(tj, tk, 25):
        value, slope = state_interp([p(tj)], [p(tk)], [dp(tj)], [dp(tk)], tj, tk, float(t))
        worst = max(worst, abs(value[0] - p(t)), abs(slope[0] - dp(t)))
    return worst < 1e-12, f"max error {worst:.2e}"


def harmonic(t: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``x'' = -x`` in first-order form."""
    return np.stack([x[..., 1], -x[..., 0]], axis=-1)


def defect_order(grids: Tuple[int, ...] = (11, 21, 41), horizon: float = 2.0) -> Tuple[float, List[float]]:
    """Observed convergence order of the defects on an exact harmonic trajectory."""
    norms = []
    for n in grids:
        t = np.linspace(0.0, horizon, n)
        states = np.column_stack([np.cos(t), -np.sin(t)])
        decision = DecisionVector(states=states, controls=np.zeros((n, 1)), final_time=horizon)
        norms.append(float(np.max(np.abs(defects(decision, harmonic)))))
    orders = [np.log2(norms[i] / norms[i + 1]) for i in range(len(norms) - 1)]
    return float(min(orders)), norms


@check("interpolation", "defect_order")
def _defect_order(ctx: VerifyContext) -> Tuple[bool, str]:
    order, norms = defect_order()
    return order >= 3.0, f"observed order {order:.2f}, norms {[f'{v:.1e}' for v in norms]}"


@check("optimizer", "double_integrator")
def _double_integrator(ctx: VerifyContext) -> Tuple[bool, str]:
    problem, objective, dynamics, guess = double_integrator_problem(n=11)
    start = time.perf_counter()
    _, report = nlp_solve(problem, objective, dynamics, guess)
    elapsed = time.perf_counter() - start
    ok = abs(report.cost - 12.0) <= 0.02 * 12.0 and report.constraint_violation < 1e-4 and elapsed < 30.0
    return ok, f"cost={report.cost:.5f}, violation={report.constraint_violation:.1e}, {elapsed:.1f} s"


@check("walking", "displacement")
def _displacement(ctx: VerifyContext) -> Tuple[bool, str]:
    trajectory, elapsed = ctx.walk
    metrics = compute_metrics(trajectory, ctx.config.robot, ctx.gait)
    ok = not trajectory.aborted and 0.21 <= metrics.forward_displacement <= 0.39 and elapsed < 60.0
    return ok, f"{metrics.forward_displacement:.3f} m in {trajectory.duration:.2f} s (runtime {elapsed:.1f} s)"


@check("walking", "attitude")
def _attitude(ctx: VerifyContext) -> Tuple[bool, str]:
    trajectory, _ = ctx.walk
    m = compute_metrics(trajectory, ctx.config.robot, ctx.gait)
    ok = m.max_abs_roll < 0.2 and m.max_abs_pitch < 0.2 and m.max_angular_rate < 2.0
    return ok, f"|roll|={m.max_abs_roll:.3f}, |pitch|={m.max_abs_pitch:.3f}, |w|={m.max_angular_rate:.3f}"


@check("walking", "thrust_budget")
def _thrust_budget(ctx: VerifyContext) -> Tuple[bool, str]:
    trajectory, _ = ctx.walk
    peak = float(np.max(trajectory.thruster_forces.sum(axis=1)))
    return peak <= 8.0 * KGF + 1e-9, f"peak total {peak:.3f} N"


@check("walking", "slippage")
def _slippage(ctx: VerifyContext) -> Tuple[bool, str]:
    trajectory, _ = ctx.walk
    m = compute_metrics(trajectory, ctx.config.robot, ctx.gait)
    return m.max_stance_slip < 5e-3, f"max stance drift {1e3 * m.max_stance_slip:.2f} mm"


@check("determinism", "simulate_twice")
def _determinism(ctx: VerifyContext) -> Tuple[bool, str]:
    cfg = ctx.config
    short = replace(cfg.sim, duration=min(0.3, cfg.sim.duration))
    blobs = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in range(2):
            path = write_trajectory(Path(tmp) / f"run{k}.csv", simulate(short, ctx.gait, cfg.robot, cfg.ground))
            blobs.append(path.read_bytes())
    return blobs[0] == blobs[1], f"{len(blobs[0])} bytes"


def fan_clipping(controls: np.ndarray, robot: RobotParams) -> float:
    """Largest change the actuator limits make to the fan split of any node wrench."""
    worst = 0.0
    for u in np.atleast_2d(controls):
        desired = Wrench.from_array(u[:6])
        raw = wrench_allocation(desired, robot, clamp=False).forces
        worst = max(worst, float(np.max(np.abs(wrench_allocation(desired, robot).forces - raw))))
    return worst


@check("collocation", "hrom_smoke", slow=True)
def _hrom_smoke(ctx: VerifyContext) -> Tuple[bool, str]:
    cfg = ctx.config
    trajectory, _ = ctx.walk
    opt = replace(cfg.opt, n=21, tol_c=1e-3)
    problem, objective, dynamics, guess = hrom_problem(
        trajectory, cfg.robot, cfg.ground, ctx.gait, opt, cfg.sim.tracking, cfg.sim.reference_attitude
    )
    program = CollocationProgram(problem, dynamics, objective)
    y0 = np.clip(guess.flatten(), *program.bounds())
    start_cost = program.objective(y0)
    start = time.perf_counter()
    try:
        solution, report = nlp_solve(problem, objective, dynamics, guess, opt.solver_options())
    except HromError as exc:
        return False, str(exc)
    elapsed = time.perf_counter() - start
    clipped = fan_clipping(solution.controls, cfg.robot)
    ok = report.constraint_violation < 1e-3 and clipped < 2e-3 and report.cost <= start_cost and elapsed < 600.0
    return ok, (
        f"violation={report.constraint_violation:.1e}, fan clipping {clipped:.1e} N, "
        f"cost {start_cost:.4g} -> {report.cost:.4g}, {elapsed:.0f} s"
    )


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def run_checks(
    context: VerifyContext, suite_filter: Optional[str] = None, include_slow: bool = False
) -> List[CheckResult]:
    """Run the selected checks in registration order."""
    results = []
    for item in CHECKS:
        if suite_filter and suite_filter not in (item.suite, f"{item.suite}.{item.name}"):
            continue
        if item.slow and not include_slow:
            continue
        start = time.perf_counter()
        try:
            passed, detail = item.func(context)
        except Exception as exc:  # any failure to evaluate is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        seconds = time.perf_counter() - start
        logger.debug(f"{item.suite}.{item.name}: {'PASS' if passed else 'FAIL'} ({seconds:.2f} s)")
        results.append(CheckResult(item.suite, item.name, bool(passed), detail, seconds))
    return results


def format_table(results: List[CheckResult]) -> str:
    """Plain-text pass/fail table."""
    if not results:
        return "no checks selected"
    suite_w = max(len("suite"), *(len(r.suite) for r in results))
    name_w = max(len("check"), *(len(r.name) for r in results))
    lines = [f"{'suite':<{suite_w}}  {'check':<{name_w}}  result  detail"]
    for r in results:
        lines.append(f"{r.suite:<{suite_w}}  {r.name:<{name_w}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    passed = sum(r.passed for r in results)
    lines.append(f"{passed}/{len(results)} passed")
    return "\n".join(lines)


def suites() -> Dict[str, List[str]]:
    """Registered check names per suite."""
    out: Dict[str, List[str]] = {}
    for item in CHECKS:
        out.setdefault(item.suite, []).append(item.name)
    return out
