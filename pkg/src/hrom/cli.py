"""
Command-line entry point.

    hrom simulate <cfg> [--out DIR] [--dt S] [--duration S]
    hrom optimize <cfg> [--n N] [--out DIR]
    hrom verify [--filter NAME] [--full] [--config CFG]

Exit codes: 0 success, 1 verification failure, 2 configuration error
(nothing written), 3 simulation abort (partial outputs kept), 4 solver
stopped short of its tolerances (best iterate written).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

from . import __version__
from .config import RunConfig, load_config
from .exceptions import ConfigError, GaitError, SolverError, TooShort
from .gait import GaitPlan, build_gait
from .io import write_json, write_plot_data, write_solution, write_trajectory
from .sim import compute_metrics, simulate
from .trajopt.collocation import DecisionVector, nlp_solve
from .trajopt.problems import HromDynamics, double_integrator_problem, hrom_problem
from .trajopt.solver import SolverReport
from .verify import VerifyContext, format_table, run_checks

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_SIM_ABORT = 3
EXIT_SOLVER = 4


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _prepare(path: str, overrides: Dict[str, Dict[str, Any]]) -> Tuple[RunConfig, GaitPlan]:
    config = load_config(path, overrides)
    try:
        gait = build_gait(config.gait, config.robot)
    except GaitError as exc:
        raise ConfigError(str(exc), key="gait", cause=exc) from exc
    return config, gait


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run the closed-loop walk and write the trajectory, metadata and plot data."""
    overrides: Dict[str, Dict[str, Any]] = {"sim": {}}
    if args.dt is not None:
        overrides["sim"]["dt_s"] = repr(args.dt)
    if args.duration is not None:
        overrides["sim"]["duration_s"] = repr(args.duration)
    try:
        config, gait = _prepare(args.config, overrides)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG

    out = config.resolve_output_dir(args.out)
    trajectory = simulate(config.sim, gait, config.robot, config.ground)
    write_trajectory(out / "trajectory.csv", trajectory)
    write_plot_data(out, trajectory, config.robot)
    metrics = compute_metrics(trajectory, config.robot, gait)
    write_json(
        out / "meta.json",
        {
            "version": __version__,
            "command": "simulate",
            "config": config.echo(),
            "samples": len(trajectory),
            "initial_state": trajectory.states[0],
            "metrics": metrics.as_dict(),
            "aborted": trajectory.aborted,
            "abort_reason": trajectory.abort_reason,
        },
    )
    print(f"wrote {len(trajectory)} samples to {out}")
    if trajectory.aborted:
        print(f"simulation aborted: {trajectory.abort_reason}", file=sys.stderr)
        return EXIT_SIM_ABORT
    return EXIT_OK


def _write_solution(
    out: Path,
    config: RunConfig,
    decision: DecisionVector,
    report: SolverReport,
    dynamics: Optional[HromDynamics],
) -> None:
    controls = dynamics.full_controls(decision) if dynamics is not None else decision.controls
    write_solution(out / "solution.csv", decision.times, decision.states, controls)
    write_json(
        out / "solver_report.json",
        {
            "version": __version__,
            "command": "optimize",
            "problem": config.opt.problem,
            "config": config.echo(),
            "final_time": decision.final_time,
            "report": report.as_dict(),
        },
    )


def cmd_optimize(args: argparse.Namespace) -> int:
    """Seed, transcribe and solve the configured problem."""
    overrides: Dict[str, Dict[str, Any]] = {"opt": {}}
    if args.n is not None:
        overrides["opt"]["n"] = str(args.n)
    try:
        config, gait = _prepare(args.config, overrides)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG

    out = config.resolve_output_dir(args.out)
    opt = config.opt
    hrom_dynamics: Optional[HromDynamics] = None
    if opt.problem == "double_integrator":
        problem, objective, dynamics, guess = double_integrator_problem(n=opt.n)
    else:
        seed = simulate(config.sim, gait, config.robot, config.ground)
        if seed.aborted:
            write_trajectory(out / "seed_trajectory.csv", seed)
            print(f"seed simulation aborted: {seed.abort_reason}", file=sys.stderr)
            return EXIT_SIM_ABORT
        try:
            problem, objective, hrom_dynamics, guess = hrom_problem(
                seed, config.robot, config.ground, gait, opt, config.sim.tracking, config.sim.reference_attitude
            )
        except TooShort as exc:
            print(exc, file=sys.stderr)
            return EXIT_SIM_ABORT
        dynamics = hrom_dynamics

    try:
        decision, report = nlp_solve(problem, objective, dynamics, guess, opt.solver_options())
    except SolverError as exc:
        print(exc, file=sys.stderr)
        if exc.best is not None:
            decision, report = exc.best
            _write_solution(out, config, decision, report, hrom_dynamics)
        return EXIT_SOLVER

    _write_solution(out, config, decision, report, hrom_dynamics)
    print(
        f"{report.status}: cost={report.cost:.6g}, violation={report.constraint_violation:.2e}, "
        f"t_f={decision.final_time:.4f} s; wrote {out}"
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the acceptance suite and print the result table."""
    results = run_checks(VerifyContext(args.config), args.filter, include_slow=args.full)
    print(format_table(results))
    return EXIT_OK if results and all(r.passed for r in results) else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrom", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the heuristic walk")
    p.add_argument("config", help="configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dt", type=float, help="integration step in seconds")
    p.add_argument("--duration", type=float, help="simulated time in seconds")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("optimize", help="solve the collocation problem")
    p.add_argument("config", help="configuration file")
    p.add_argument("--n", type=int, help="number of collocation nodes")
    p.add_argument("--out", help="output directory")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--filter", help="suite name or suite.check to run")
    p.add_argument("--full", action="store_true", help="include the slow collocation smoke test")
    p.add_argument("--config", help="configuration to verify instead of the bundled walk")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    _setup_logging(args.verbose)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
