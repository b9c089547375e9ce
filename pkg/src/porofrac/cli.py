"""Command-line driver.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 energy-inequality violation under --check-energy.
"""

import argparse
import os
import sys

from .config import ConfigError, build_problem, load_config
from .solver import SolverError, check_pencil, run, DaeSystem
from .vtkio import (
    ENERGY_COLUMNS,
    TIMESERIES_COLUMNS,
    write_csv,
    write_fields,
    write_fracture_fields,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ENERGY = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="porofrac",
        description="Fractured poroelastic medium simulator",
    )
    p.add_argument("--config", required=True, help="run configuration file")
    p.add_argument("--output", help="override the output directory")
    p.add_argument("--steps", type=int, help="override the number of time steps")
    p.add_argument("--mode", choices=("Q0", "Q"), help="override the solve mode")
    p.add_argument(
        "--check-energy",
        action="store_true",
        help="fail (exit 4) if the discrete energy inequality is violated",
    )
    p.add_argument(
        "--convergence",
        type=int,
        metavar="L",
        help="run an L-level manufactured-solution convergence study",
    )
    p.add_argument(
        "--dump-matrices",
        action="store_true",
        help="write every assembled matrix in coordinate text format",
    )
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.steps is not None:
            if args.steps < 0:
                raise ConfigError("--steps must be nonnegative")
            cfg.n_steps = args.steps
        if args.mode is not None:
            cfg.step.mode = args.mode
            if args.mode == "Q" and cfg.material.damping_gamma <= 0.0:
                raise ConfigError(
                    "mode=Q: viscous regularization required with friction"
                )
        if args.output is not None:
            cfg.output["directory"] = args.output
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    outdir = cfg.output["directory"]

    if args.convergence is not None:
        return _run_convergence(args.convergence, outdir)

    try:
        problem = build_problem(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.dump_matrices:
        from .assembly import write_matrix_coordinate

        mdir = os.path.join(outdir, "matrices")
        os.makedirs(mdir, exist_ok=True)
        for name, mat in problem.mats.named().items():
            write_matrix_coordinate(mat, os.path.join(mdir, f"{name}.txt"))

    report = check_pencil(DaeSystem(problem.mats, problem.params))
    if not report.passed:
        print(f"solver error: {report}", file=sys.stderr)
        return EXIT_SOLVER

    try:
        result = run(
            problem,
            cfg.step,
            cfg.n_steps,
            check_energy=args.check_energy,
        )
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    os.makedirs(outdir, exist_ok=True)
    if cfg.output["timeseries"]:
        write_csv(os.path.join(outdir, "timeseries.csv"), result.rows, TIMESERIES_COLUMNS)
    if cfg.output["energy"]:
        write_csv(os.path.join(outdir, "energy.csv"), result.rows, ENERGY_COLUMNS)
    _write_field_files(cfg, problem, result, outdir)

    print(
        f"completed {cfg.n_steps} steps to t={result.final.t:.6g} "
        f"({cfg.step.mode}); {report}"
    )
    if args.check_energy and result.energy_violations:
        n_bad = len(result.energy_violations)
        worst = max(v[1]["margin"] / v[1]["scale"] for v in result.energy_violations)
        print(
            f"energy inequality violated at {n_bad} step(s), "
            f"worst relative margin {worst:.3e}",
            file=sys.stderr,
        )
        return EXIT_ENERGY
    return EXIT_OK


def _write_field_files(cfg, problem, result, outdir):
    which = cfg.output["fields"]
    if which == "none":
        return
    n_last = len(result.states) - 1
    selected = (
        list(enumerate(result.states)) if which == "all" else [(n_last, result.final)]
    )
    for idx, state in selected:
        write_fields(
            os.path.join(outdir, f"fields_{idx:05d}.vtk"),
            problem.mesh,
            problem.dofmap,
            state,
        )
        write_fracture_fields(
            os.path.join(outdir, f"fracture_{idx:05d}.vtk"),
            problem.mesh,
            problem.frac,
            problem.dofmap,
            state,
            problem.params,
        )


def _run_convergence(levels: int, outdir: str) -> int:
    from .diagnostics import manufactured_solution_errors

    try:
        table = manufactured_solution_errors("mms_smooth", levels)
    except (ValueError, SolverError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    os.makedirs(outdir, exist_ok=True)
    write_csv(
        os.path.join(outdir, "convergence.csv"),
        table.rows(),
        ("h", "l2_p", "h1_p", "l2_u", "h1_u"),
    )
    print("h levels:", ", ".join(f"{h:g}" for h in table.h))
    for key in ("l2_p", "h1_p", "l2_u", "h1_u"):
        orders = ", ".join(f"{o:.2f}" for o in table.orders(key))
        print(f"{key}: errors {[f'{e:.3e}' for e in getattr(table, key)]} orders [{orders}]")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
