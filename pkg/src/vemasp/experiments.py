"""Experiment suites: one solve per (mesh, preconditioner) pair, reported as rows.

Tables 1 and 2 sweep diamond meshes over ``N``; Tables 3 and 4 cut a
triangle grid with the line ``y = 0.5 + eps``.  Tables 1 and 3 solve the
H(div) projection problem, Tables 2 and 4 the Darcy problem.
"""

from __future__ import annotations

import csv
import io
import time
from datetime import datetime, timezone
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .krylov import DimensionExceedsCap, condition_number, gmres
from .mesh import (PolygonalMesh, aspect_ratio, cut_with_line, generate_diamond,
                   generate_triangle_grid, read_mesh)
from .precond import (AuxiliarySpaces, build_additive, build_darcy_block, build_diag_reference,
                      build_multiplicative)
from .problems import (AssembledSystem, assemble_darcy, assemble_projection,
                       assemble_projection_system, darcy_data, get_field)

CSV_COLUMNS = ("suite", "mesh", "N", "eps", "ndof", "alpha", "precond", "smoother", "tol",
               "kappa", "iters", "converged", "seconds")
PRECONDITIONERS = ("none", "diag", "add", "mult")
CUT_BACKGROUND_N = 16
CUT_EPS = (None, 1e-2, 1e-4, 1e-6, 1e-8)
DIAMOND_N = (4, 8, 16, 32)


class MeshSpecError(ValueError):
    pass


@dataclass
class MeshCase:
    mesh: PolygonalMesh
    label: str
    N: int | None = None
    eps: float | None = None


def parse_mesh_spec(spec: str) -> MeshCase:
    """Build a mesh from ``diamond:N``, ``triangle:N``, ``cut:N:eps`` or a JSON path."""
    parts = spec.split(":")
    arity = {"diamond": 2, "triangle": 2, "cut": 3}
    if parts[0] in arity:
        if len(parts) != arity[parts[0]]:
            raise MeshSpecError(f"bad mesh spec {spec!r}")
        try:
            N = int(parts[1])
            eps = float(parts[2]) if parts[0] == "cut" else None
        except ValueError:
            raise MeshSpecError(f"bad number in mesh spec {spec!r}") from None
        if N < 1:
            raise MeshSpecError(f"N must be positive in {spec!r}")
        if parts[0] == "diamond":
            return MeshCase(generate_diamond(N), spec, N)
        grid = generate_triangle_grid(N)
        if eps is None:
            return MeshCase(grid, spec, N)
        return MeshCase(cut_with_line(grid, 0.5 + eps), spec, N, eps)
    path = Path(spec)
    if not path.exists():
        raise MeshSpecError(f"unrecognized mesh spec {spec!r}; use diamond:N, triangle:N, "
                            "cut:N:eps or an existing mesh file")
    return MeshCase(read_mesh(path), path.name)


@dataclass
class Row:
    suite: str
    mesh: str
    N: int | None
    eps: float | None
    ndof: int
    alpha: float
    precond: str
    smoother: str
    tol: float
    kappa: float | None
    iters: int
    converged: bool
    seconds: float | None

    def csv_values(self) -> list[str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return [fmt(getattr(self, c)) for c in CSV_COLUMNS]


class Problem:
    """Assembled system plus cached auxiliary spaces for one mesh and problem kind."""

    def __init__(self, case: MeshCase, kind: str, data: str):
        if kind not in ("projection", "darcy"):
            raise ValueError(f"unknown problem kind {kind!r}")
        self.case = case
        self.kind = kind
        mesh = case.mesh
        if kind == "projection":
            self.system: AssembledSystem = assemble_projection_system(mesh, get_field(data))
            self.facet_matrix = self.system.matrix
        else:
            self.system = assemble_darcy(mesh, *darcy_data(data))
            self.facet_matrix = assemble_projection(mesh)
        self._aux: AuxiliarySpaces | None = None

    @property
    def aux(self) -> AuxiliarySpaces:
        if self._aux is None:
            self._aux = AuxiliarySpaces.build(self.case.mesh)
        return self._aux

    def preconditioner(self, name: str, smoother: str = "diag"):
        mesh = self.case.mesh
        if name == "none":
            return None
        if name == "diag":
            return build_diag_reference(self.system)
        if name == "add":
            B = build_additive(self.facet_matrix, mesh, smoother, self.aux)
        elif name == "mult":
            B = build_multiplicative(self.facet_matrix, mesh, smoother, self.aux)
        else:
            raise ValueError(f"unknown preconditioner {name!r}")
        return B if self.kind == "projection" else build_darcy_block(B, mesh)


def run_case(problem: Problem, precond: str, suite: str = "", smoother: str = "diag",
             tol: float = 1e-8, maxit: int = 2000, cond: bool = True,
             timings: bool = True) -> Row:
    """Solve once with GMRES and optionally compute ``kappa(BA)``."""
    start = time.perf_counter()
    B = problem.preconditioner(precond, smoother)
    A = problem.system.matrix
    result = gmres(A, problem.system.rhs, B, tol=tol, maxit=maxit)
    seconds = time.perf_counter() - start
    kappa = None
    if cond:
        try:
            kappa = condition_number(A, B).value
        except DimensionExceedsCap:
            kappa = None
    case = problem.case
    return Row(suite, case.label, case.N, case.eps, A.shape[0], aspect_ratio(case.mesh),
               precond, smoother if precond in ("add", "mult") else "", tol, kappa,
               result.iterations, result.converged, round(seconds, 3) if timings else None)


def suite_cases(table: int, sizes: Iterable[int] | None = None,
                background: int = CUT_BACKGROUND_N) -> tuple[str, str, list[str]]:
    """Problem kind, data name and mesh specs of a table."""
    if table in (1, 2):
        specs = [f"diamond:{N}" for N in (sizes or DIAMOND_N)]
        return ("projection" if table == 1 else "darcy"), "f1", specs
    if table in (3, 4):
        specs = [f"triangle:{background}" if e is None else f"cut:{background}:{e:g}"
                 for e in CUT_EPS]
        return ("projection" if table == 3 else "darcy"), "f2", specs
    raise ValueError(f"unknown table {table}")


@dataclass
class ExperimentReport:
    suite: str
    tol: float
    smoother: str
    rows: list[Row] = field(default_factory=list)
    created: str | None = None  # ISO timestamp; None keeps reports reproducible

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(row.csv_values())
        return buf.getvalue()

    def to_markdown(self) -> str:
        """Pivot into one line per mesh: condition numbers then iterations."""
        meshes: dict[str, dict[str, Row]] = {}
        for row in self.rows:
            meshes.setdefault(row.mesh, {})[row.precond] = row
        names = [p for p in PRECONDITIONERS if any(p in r for r in meshes.values())]
        head = (["mesh", "#dof", "alpha"] + [f"kappa {p}" for p in names]
                + [f"iters {p}" for p in names])
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        for label, by_pre in meshes.items():
            any_row = next(iter(by_pre.values()))
            kap = []
            its = []
            for p in names:
                r = by_pre.get(p)
                kap.append("" if r is None or r.kappa is None else _sci(r.kappa))
                its.append("" if r is None else f"{r.iters}{'' if r.converged else '*'}")
            cells = [label, str(any_row.ndof), _sci(any_row.alpha)] + kap + its
            lines.append("| " + " | ".join(cells) + " |")
        lines.append("")
        from . import __version__

        meta = f"tol = {self.tol:g}, smoother = {self.smoother}, vemasp {__version__}"
        if self.created:
            meta += f", {self.created}"
        lines.append(meta + "; * = not converged")
        return "\n".join(lines) + "\n"


def _sci(v: float) -> str:
    return f"{v:.2f}" if 1.0 <= v < 100.0 else f"{v:.2E}"


def run_suite(table: int, tol: float = 1e-8, smoother: str = "diag", cond: bool = True,
              timings: bool = True, sizes: Iterable[int] | None = None,
              background: int = CUT_BACKGROUND_N, preconds: Iterable[str] = PRECONDITIONERS,
              on_row: Callable[[Row], None] | None = None) -> ExperimentReport:
    """Run every mesh and preconditioner of one table.

    ``on_row`` is called after each solve, which lets callers flush partial
    results.
    """
    kind, data, specs = suite_cases(table, sizes, background)
    created = datetime.now(timezone.utc).isoformat(timespec="seconds") if timings else None
    report = ExperimentReport(f"table{table}", tol, smoother, created=created)
    for spec in specs:
        problem = Problem(parse_mesh_spec(spec), kind, data)
        for name in preconds:
            row = run_case(problem, name, report.suite, smoother, tol, cond=cond, timings=timings)
            report.rows.append(row)
            if on_row is not None:
                on_row(row)
    return report


def rows_as_dicts(rows: Iterable[Row]) -> list[dict]:
    return [asdict(r) for r in rows]


def relative_spread(values: Iterable[float]) -> float:
    """``max/min - 1`` of positive values."""
    v = np.asarray(list(values), dtype=float)
    return float(v.max() / v.min() - 1.0)
