"""Command-line front end.

Subcommands::

    vemasp mesh    --type diamond|triangle|cut --N n [--eps e] --out m.json [--validate]
    vemasp project --mesh SPEC --data f1|f2 --precond none|diag|add|mult [--cond] [--report r.csv]
    vemasp darcy   (same flags as project)
    vemasp sweep   --table 1|2|3|4 --out t.csv [--markdown t.md]

``SPEC`` is ``diamond:N``, ``triangle:N``, ``cut:N:eps`` or a mesh JSON file.
Exit codes: 0 success, 1 numerical failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from . import __version__
from .experiments import (CSV_COLUMNS, CUT_BACKGROUND_N, PRECONDITIONERS, ExperimentReport,
                          MeshSpecError, Problem, Row, parse_mesh_spec, run_case, run_suite)
from .krylov import DimensionExceedsCap
from .mesh import MeshError, aspect_ratio, cut_with_line, generate_diamond, \
    generate_triangle_grid, validate, write_mesh
from .precond import FactorizationFailure, NonPositiveDiagonal
from .problems import FIELDS

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


def _append_rows(path: Path, rows: list[Row]) -> None:
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new:
            writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_values())


def _print_row(row: Row) -> None:
    kappa = "-" if row.kappa is None else f"{row.kappa:.4g}"
    status = "converged" if row.converged else "NOT converged"
    print(f"{row.mesh}: ndof={row.ndof} alpha={row.alpha:.3g} precond={row.precond} "
          f"kappa={kappa} iters={row.iters} ({status})")


def cmd_mesh(args) -> int:
    if args.type == "cut" and args.eps is None:
        print("error: --type cut needs --eps", file=sys.stderr)
        return EXIT_USAGE
    if args.N < 1:
        print("error: --N must be positive", file=sys.stderr)
        return EXIT_USAGE
    if args.type == "diamond":
        mesh = generate_diamond(args.N)
    else:
        mesh = generate_triangle_grid(args.N)
        if args.type == "cut":
            mesh = cut_with_line(mesh, 0.5 + args.eps)
    write_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_nodes} vertices, {mesh.n_facets} facets, "
          f"{mesh.n_cells} cells, alpha = {aspect_ratio(mesh):.4E}")
    if args.validate:
        report = validate(mesh)
        print(report.summary())
        if not report.ok:
            return EXIT_NUMERIC
    return EXIT_OK


def _cmd_solve(args, kind: str) -> int:
    case = parse_mesh_spec(args.mesh)
    problem = Problem(case, kind, args.data)
    row = run_case(problem, args.precond, kind, args.smoother, args.tol, args.maxit,
                   cond=args.cond, timings=not args.no_timings)
    _print_row(row)
    if args.report:
        _append_rows(Path(args.report), [row])
    return EXIT_OK if row.converged else EXIT_NUMERIC


def cmd_project(args) -> int:
    return _cmd_solve(args, "projection")


def cmd_darcy(args) -> int:
    return _cmd_solve(args, "darcy")


def cmd_sweep(args) -> int:
    out = Path(args.out)
    out.write_text(",".join(CSV_COLUMNS) + "\n")
    rows: list[Row] = []

    def flush(row: Row) -> None:
        rows.append(row)
        _append_rows(out, [row])
        _print_row(row)

    try:
        report = run_suite(args.table, args.tol, args.smoother, cond=not args.no_cond,
                           timings=not args.no_timings, sizes=args.sizes,
                           background=args.background, preconds=args.precond, on_row=flush)
    except (FactorizationFailure, NonPositiveDiagonal, DimensionExceedsCap) as exc:
        print(f"error: {exc} ({len(rows)} rows written to {out})", file=sys.stderr)
        return EXIT_NUMERIC
    if args.markdown:
        Path(args.markdown).write_text(report.to_markdown())
    return EXIT_OK if all(r.converged for r in report.rows) else EXIT_NUMERIC


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-8, help="relative preconditioned residual")
    p.add_argument("--maxit", type=int, default=2000)
    p.add_argument("--smoother", choices=("diag", "stab"), default="diag")
    p.add_argument("--no-timings", action="store_true",
                   help="leave the seconds column empty so reports are bit-reproducible")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vemasp", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate a mesh and write it as JSON")
    p.add_argument("--type", choices=("diamond", "triangle", "cut"), required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--validate", action="store_true")
    p.set_defaults(func=cmd_mesh)

    for name, func, data_help in (("project", cmd_project, "load field"),
                                  ("darcy", cmd_darcy, "f1 pairs with g1, f2 with g2 = 0")):
        p = sub.add_parser(name, help=f"one {name} solve")
        p.add_argument("--mesh", required=True, help="diamond:N, triangle:N, cut:N:eps or file")
        p.add_argument("--data", choices=sorted(k for k in FIELDS if k.startswith("f")),
                       default="f1", help=data_help)
        p.add_argument("--precond", choices=PRECONDITIONERS, default="add")
        p.add_argument("--cond", action="store_true", help="also compute kappa(BA)")
        p.add_argument("--report", help="CSV file to append the result row to")
        _solver_flags(p)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="run one experiment table")
    p.add_argument("--table", type=int, choices=(1, 2, 3, 4), required=True)
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--markdown", help="optional Markdown table output")
    p.add_argument("--no-cond", action="store_true", help="skip condition numbers")
    p.add_argument("--sizes", type=int, nargs="+", help="diamond N values (tables 1 and 2)")
    p.add_argument("--background", type=int, default=CUT_BACKGROUND_N,
                   help="triangle grid size for tables 3 and 4")
    p.add_argument("--precond", nargs="+", choices=PRECONDITIONERS, default=list(PRECONDITIONERS))
    _solver_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MeshSpecError, MeshError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FactorizationFailure, NonPositiveDiagonal) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
