"""Command-line driver: study commands, scenario runner, table output.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.  The
default output directory is ``--out``, then ``ENSHEAT_OUT``, then the
current directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .assembly import l2_norm
from .config import ConfigError, load_scenario
from .ensemble import run
from .mesh import MeshFormatError, MeshValidationError
from .verification import (
    convergence_study,
    ensemble_size_study,
    perturbation_study,
    printing_norms,
    steady_state_study,
    write_csv,
)
from .vtkio import write_vtk

USAGE_EXIT = 2
FAILURE_EXIT = 1


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ensheat",
        description="Ensemble heat-conduction studies on P1 triangular meshes",
    )
    parser.add_argument("--out", help="output directory (default: $ENSHEAT_OUT or .)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads per step")
    parser.add_argument(
        "--solver", choices=("cholesky", "pcg"), default="cholesky", help="linear solver"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", help="refinement study of the mean error")
    conv.add_argument("kind", choices=("mixed", "robin"))
    conv.add_argument("--ms", type=_int_list, default=[4, 8, 16, 32, 64])
    conv.add_argument("--l", type=int, default=1, help="perturbation exponent")
    conv.add_argument("--J", type=int, default=4, help="ensemble size")

    pert = sub.add_parser("perturb", help="perturbation-size study")
    pert.add_argument("kind", choices=("mixed", "robin"))
    pert.add_argument("--ms", type=_int_list, default=[4, 8, 16, 32, 64])
    pert.add_argument("--ls", type=_int_list, default=[0, 1, 2, 3, 4])
    pert.add_argument("--J", type=int, default=4)

    size = sub.add_parser("ensemble-size", help="error versus ensemble size")
    size.add_argument("--Js", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64])
    size.add_argument("--m", type=int, default=16)
    size.add_argument("--l", type=int, default=1)
    size.add_argument("--kind", choices=("mixed", "robin"), default="mixed")

    steady = sub.add_parser("steady", help="steady-state benchmark")
    steady.add_argument("--ms", type=_int_list, default=[8, 16])
    steady.add_argument("--tol", type=float, default=1e-6)

    sub.add_parser("print3d", help="pulse-laser application run")

    runner = sub.add_parser("run", help="run a scenario file")
    runner.add_argument("scenario", help="path to the scenario file")

    return parser


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("ENSHEAT_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cmd_converge(args) -> int:
    table = convergence_study(
        args.kind, ms=args.ms, l=args.l, J=args.J, solver=args.solver, threads=args.threads
    )
    path = _out_dir(args) / f"convergence_{args.kind}.csv"
    table.to_csv(path)
    print(f"wrote {path}")
    return 0


def _cmd_perturb(args) -> int:
    header, rows = perturbation_study(
        args.kind, ls=args.ls, ms=args.ms, J=args.J, solver=args.solver, threads=args.threads
    )
    path = _out_dir(args) / f"perturbation_{args.kind}.csv"
    write_csv(path, header, rows)
    print(f"wrote {path}")
    return 0


def _cmd_ensemble_size(args) -> int:
    header, rows = ensemble_size_study(
        kind=args.kind, Js=args.Js, m=args.m, l=args.l, solver=args.solver, threads=args.threads
    )
    path = _out_dir(args) / "ensemble_size.csv"
    write_csv(path, header, rows)
    print(f"wrote {path}")
    return 0


def _cmd_steady(args) -> int:
    header, rows = steady_state_study(ms=args.ms, tol=args.tol)
    path = _out_dir(args) / "steady_state.csv"
    write_csv(path, header, rows)
    print(f"wrote {path}")
    return 0


def _cmd_print3d(args) -> int:
    header, rows, series = printing_norms(solver=args.solver, threads=args.threads)
    out = _out_dir(args)
    path = out / "printing_norms.csv"
    write_csv(path, header, rows)
    mesh = series.scenario.mesh
    for level, fields in series.snapshots:
        if level % 8 != 0 and level != series.snapshot_levels()[-1]:
            continue
        data = {f"T{j + 1}": field for j, field in enumerate(fields)}
        data["T_mean"] = np.mean(fields, axis=0)
        write_vtk(out / f"printing_{level:04d}.vtk", mesh, data)
    print(f"wrote {path} and field snapshots")
    return 0


def _cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    scenario = cfg.scenario
    out = Path(args.out or os.environ.get("ENSHEAT_OUT") or cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    series = run(scenario, solver=args.solver, threads=args.threads)
    system = scenario.system()

    J = scenario.ensemble_size
    header = ["t"] + [f"norm_T{j + 1}" for j in range(J)] + ["norm_mean"]
    norms = series.member_norm_table()
    rows = []
    snapshot_map = dict(series.snapshots)
    for level in range(len(series.times)):
        if level in snapshot_map:
            mean_norm = l2_norm(system.mass, np.mean(snapshot_map[level], axis=0))
            rows.append((series.times[level], *norms[level], mean_norm))
    name = scenario.name or "run"
    path = out / f"{name}_norms.csv"
    write_csv(path, header, rows)
    if cfg.write_snapshots:
        for level, fields in series.snapshots:
            data = {f"T{j + 1}": field for j, field in enumerate(fields)}
            data["T_mean"] = np.mean(fields, axis=0)
            write_vtk(out / f"{name}_{level:04d}.vtk", scenario.mesh, data)
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "converge": _cmd_converge,
    "perturb": _cmd_perturb,
    "ensemble-size": _cmd_ensemble_size,
    "steady": _cmd_steady,
    "print3d": _cmd_print3d,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, MeshFormatError, MeshValidationError, FileNotFoundError) as exc:
        print(f"ensheat: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except ValueError as exc:
        print(f"ensheat: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except Exception as exc:  # runtime failure
        print(f"ensheat: {type(exc).__name__}: {exc}", file=sys.stderr)
        return FAILURE_EXIT


if __name__ == "__main__":
    sys.exit(main())
