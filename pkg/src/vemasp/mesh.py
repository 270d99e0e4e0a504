"""Polygonal meshes of the unit square.

A mesh is stored as vertex coordinates plus counterclockwise vertex cycles.
Facets and the cell/facet incidence are derived canonically: facets are the
sorted vertex pairs ``(a, b)`` with ``a < b``, ordered lexicographically.
Each facet carries the fixed unit normal obtained by rotating its tangent
``(x_b - x_a) / |x_b - x_a|`` by +90 degrees.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

CUT_TOL = 1e-14
ASPECT_WARN = 50.0


class MeshError(ValueError):
    """Base class for mesh construction and I/O failures."""


class NonPositiveArea(MeshError):
    pass


class DegenerateCut(MeshError):
    pass


class TopologyError(MeshError):
    pass


class ParseError(MeshError):
    pass


@dataclass(frozen=True)
class CellGeometry:
    area: float
    centroid: np.ndarray
    diameter: float


def polygon_area_centroid(xy: np.ndarray) -> tuple[float, np.ndarray]:
    """Signed shoelace area and centroid of a closed vertex cycle.

    Coordinates are taken relative to the first vertex; otherwise the cross
    products cancel catastrophically on cells much smaller than their
    distance from the origin.
    """
    xy = np.asarray(xy, dtype=float)
    origin = xy[0]
    x, y = xy[:, 0] - origin[0], xy[:, 1] - origin[1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        return 0.0, xy.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return float(area), origin + np.array([cx, cy])


def polygon_diameter(xy: np.ndarray) -> float:
    diff = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=-1)).max())


@dataclass(frozen=True, eq=False)
class PolygonalMesh:
    """Immutable polygonal mesh built from vertices and CCW cells.

    Attributes:
        vertices: ``(n_nodes, 2)`` coordinates.
        cells: tuple of integer arrays, each a counterclockwise vertex cycle.
        facets: ``(n_facets, 2)`` sorted vertex pairs, tangent runs a -> b.
        cell_facets: per cell, the facet indices of its edges in traversal
            order (edge i joins local vertex i to i+1).
        cell_signs: per cell, +1 where the facet normal points out of the
            cell and -1 otherwise.
    """

    vertices: np.ndarray
    cells: tuple
    facets: np.ndarray = field(repr=False)
    cell_facets: tuple = field(repr=False)
    cell_signs: tuple = field(repr=False)

    @classmethod
    def from_cells(cls, vertices, cells: Sequence[Sequence[int]]) -> "PolygonalMesh":
        vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        cells = tuple(np.asarray(c, dtype=np.int64) for c in cells)
        n_nodes = len(vertices)
        for k, c in enumerate(cells):
            if len(c) < 3:
                raise TopologyError(f"cell {k} has fewer than 3 vertices")
            if c.min() < 0 or c.max() >= n_nodes:
                raise TopologyError(f"cell {k} references a vertex outside 0..{n_nodes - 1}")
            if len(set(c.tolist())) != len(c):
                raise TopologyError(f"cell {k} repeats a vertex")

        pairs = set()
        for c in cells:
            nxt = np.roll(c, -1)
            for a, b in zip(c.tolist(), nxt.tolist()):
                pairs.add((min(a, b), max(a, b)))
        facets = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
        index = {(int(a), int(b)): i for i, (a, b) in enumerate(facets)}

        cell_facets, cell_signs = [], []
        for c in cells:
            nxt = np.roll(c, -1)
            fids = np.empty(len(c), dtype=np.int64)
            sig = np.empty(len(c))
            for i, (a, b) in enumerate(zip(c.tolist(), nxt.tolist())):
                fids[i] = index[(min(a, b), max(a, b))]
                # traversing a CCW cell along the tangent means the +90 degree
                # normal points inward
                sig[i] = -1.0 if a < b else 1.0
            cell_facets.append(fids)
            cell_signs.append(sig)
        return cls(vertices, cells, facets, tuple(cell_facets), tuple(cell_signs))

    @property
    def n_nodes(self) -> int:
        return len(self.vertices)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_coords(self, k: int) -> np.ndarray:
        return self.vertices[self.cells[k]]

    @cached_property
    def facet_lengths(self) -> np.ndarray:
        d = self.vertices[self.facets[:, 1]] - self.vertices[self.facets[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def facet_normals(self) -> np.ndarray:
        d = self.vertices[self.facets[:, 1]] - self.vertices[self.facets[:, 0]]
        t = d / np.hypot(d[:, 0], d[:, 1])[:, None]
        return np.column_stack([-t[:, 1], t[:, 0]])

    @cached_property
    def facet_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.facets[:, 0]] + self.vertices[self.facets[:, 1]])

    @cached_property
    def geometry(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(areas, centroids, diameters)`` over all cells."""
        areas = np.empty(self.n_cells)
        centroids = np.empty((self.n_cells, 2))
        diams = np.empty(self.n_cells)
        for k in range(self.n_cells):
            xy = self.cell_coords(k)
            areas[k], centroids[k] = polygon_area_centroid(xy)
            diams[k] = polygon_diameter(xy)
        return areas, centroids, diams

    @property
    def cell_areas(self) -> np.ndarray:
        return self.geometry[0]

    @property
    def cell_diameters(self) -> np.ndarray:
        return self.geometry[2]

    @property
    def h(self) -> float:
        return float(self.cell_diameters.max())

    @cached_property
    def facet_cells(self) -> list[list[tuple[int, float]]]:
        """For each facet, the list of ``(cell, sign)`` incidences."""
        inc: list[list[tuple[int, float]]] = [[] for _ in range(self.n_facets)]
        for k, (fids, sig) in enumerate(zip(self.cell_facets, self.cell_signs)):
            for f, s in zip(fids.tolist(), sig.tolist()):
                inc[f].append((k, s))
        return inc

    def euler_characteristic(self) -> int:
        return self.n_nodes - self.n_facets + self.n_cells


def cell_geometry(mesh: PolygonalMesh, k: int) -> CellGeometry:
    xy = mesh.cell_coords(k)
    area, centroid = polygon_area_centroid(xy)
    if not area > 0.0:
        raise NonPositiveArea(f"cell {k} has area {area:g} (degenerate or clockwise)")
    return CellGeometry(area, centroid, polygon_diameter(xy))


def aspect_ratio(mesh: PolygonalMesh) -> float:
    """Largest ``diam(K)**2 / |K|`` over the cells of ``mesh``."""
    worst = 0.0
    for k in range(mesh.n_cells):
        g = cell_geometry(mesh, k)
        worst = max(worst, g.diameter**2 / g.area)
    return worst


# ----------------------------------------------------------------------------
# generators


def generate_diamond(N: int) -> PolygonalMesh:
    """N x N Cartesian grid, each square split into 1 diamond, 4 triangles and
    4 pentagons.

    Every Cartesian edge carries two extra vertices at its third points and
    each square gets four interior points at its quarter points, which form
    the central diamond.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    h = 1.0 / N
    index: dict[tuple[int, int], int] = {}
    coords: list[tuple[float, float]] = []

    # integer lattice with spacing h/12 keeps shared points exact
    def vid(i: int, j: int) -> int:
        key = (i, j)
        if key not in index:
            index[key] = len(coords)
            coords.append((i * h / 12.0, j * h / 12.0))
        return index[key]

    template = [
        # corner pentagons
        [(0, 0), (4, 0), (6, 3), (3, 6), (0, 4)],
        [(8, 0), (12, 0), (12, 4), (9, 6), (6, 3)],
        [(12, 8), (12, 12), (8, 12), (6, 9), (9, 6)],
        [(0, 8), (3, 6), (6, 9), (4, 12), (0, 12)],
        # side triangles
        [(4, 0), (8, 0), (6, 3)],
        [(12, 4), (12, 8), (9, 6)],
        [(8, 12), (4, 12), (6, 9)],
        [(0, 8), (0, 4), (3, 6)],
        # diamond
        [(6, 3), (9, 6), (6, 9), (3, 6)],
    ]
    cells = []
    for j in range(N):
        for i in range(N):
            for poly in template:
                cells.append([vid(12 * i + a, 12 * j + b) for a, b in poly])
    return PolygonalMesh.from_cells(coords, cells)


def generate_triangle_grid(N: int) -> PolygonalMesh:
    """N x N squares, each split along its lower-left/upper-right diagonal."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    t = np.linspace(0.0, 1.0, N + 1)
    X, Y = np.meshgrid(t, t)
    coords = np.column_stack([X.ravel(), Y.ravel()])
    cells = []
    for j in range(N):
        for i in range(N):
            v00 = j * (N + 1) + i
            v10, v01, v11 = v00 + 1, v00 + N + 1, v00 + N + 2
            cells.append([v00, v10, v11])
            cells.append([v00, v11, v01])
    return PolygonalMesh.from_cells(coords, cells)


def unit_square() -> PolygonalMesh:
    return PolygonalMesh.from_cells([[0, 0], [1, 0], [1, 1], [0, 1]], [[0, 1, 2, 3]])


def cut_with_line(mesh: PolygonalMesh, y0: float) -> PolygonalMesh:
    """Split every cell crossed by the horizontal line ``y = y0``.

    New vertices are created where the line crosses facets; crossed facets
    are split in two and every crossed cell is replaced by its two halves.

    Raises:
        DegenerateCut: if the line passes through an existing vertex.
    """
    if not 0.0 < y0 < 1.0:
        raise ValueError(f"cut line y0={y0} must lie strictly inside (0, 1)")
    s = mesh.vertices[:, 1] - y0
    hits = np.flatnonzero(np.abs(s) <= CUT_TOL)
    if hits.size:
        raise DegenerateCut(f"line y={y0!r} passes through vertex {int(hits[0])}; perturb eps")

    coords = [tuple(p) for p in mesh.vertices.tolist()]
    new_vertex: dict[tuple[int, int], int] = {}

    def crossing(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in new_vertex:
            pa, pb = mesh.vertices[key[0]], mesh.vertices[key[1]]
            t = (y0 - pa[1]) / (pb[1] - pa[1])
            new_vertex[key] = len(coords)
            coords.append((pa[0] + t * (pb[0] - pa[0]), y0))
        return new_vertex[key]

    cells = []
    for c in mesh.cells:
        c = c.tolist()
        side = [s[v] > 0 for v in c]
        if all(side) or not any(side):
            cells.append(c)
            continue
        below, above = [], []
        n = len(c)
        for i in range(n):
            a, b = c[i], c[(i + 1) % n]
            (above if side[i] else below).append(a)
            if side[i] != side[(i + 1) % n]:
                m = crossing(a, b)
                below.append(m)
                above.append(m)
        cells.extend([below, above])
    return PolygonalMesh.from_cells(coords, cells)


# ----------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    n_nodes: int
    n_facets: int
    n_cells: int
    euler: int
    aspect_ratio: float
    diameter_ratio: float
    nonconvex_cells: list[int] = field(default_factory=list)
    clockwise_cells: list[int] = field(default_factory=list)
    bad_facets: list[int] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        lines = [
            f"nodes={self.n_nodes} facets={self.n_facets} cells={self.n_cells} euler={self.euler}",
            f"aspect_ratio={self.aspect_ratio:.6g} diameter_ratio={self.diameter_ratio:.6g}",
        ]
        lines += [f"ERROR: {e}" for e in self.errors]
        lines += [f"WARNING: {w}" for w in self.warnings]
        lines.append("status: ok" if self.ok else "status: FAILED")
        return "\n".join(lines)


def validate(mesh: PolygonalMesh) -> ValidationReport:
    """Check orientation, convexity, facet manifoldness and Euler's relation."""
    areas, _, diams = mesh.geometry
    clockwise = [int(k) for k in np.flatnonzero(~(areas > 0))]
    nonconvex = []
    for k in range(mesh.n_cells):
        xy = mesh.cell_coords(k)
        e = np.roll(xy, -1, axis=0) - xy
        ep = np.roll(e, 1, axis=0)
        cross = ep[:, 0] * e[:, 1] - ep[:, 1] * e[:, 0]
        scale = np.hypot(*ep.T) * np.hypot(*e.T)
        if np.any(cross <= 1e-14 * scale):
            nonconvex.append(k)

    bad = []
    for f, inc in enumerate(mesh.facet_cells):
        if len(inc) == 2 and inc[0][1] + inc[1][1] == 0:
            continue
        if len(inc) == 1:
            continue
        bad.append(f)

    pos = areas[areas > 0]
    alpha = float((diams[areas > 0] ** 2 / pos).max()) if pos.size else math.inf
    ratio = float(diams.max() / diams.min()) if diams.min() > 0 else math.inf
    rep = ValidationReport(
        mesh.n_nodes, mesh.n_facets, mesh.n_cells, mesh.euler_characteristic(),
        alpha, ratio, nonconvex, clockwise, bad,
    )
    if clockwise:
        rep.errors.append(f"{len(clockwise)} cell(s) with non-positive area, first {clockwise[0]}")
    if nonconvex:
        rep.errors.append(f"{len(nonconvex)} cell(s) not strictly convex, first {nonconvex[0]}")
    if bad:
        rep.errors.append(f"{len(bad)} facet(s) with invalid incidence, first {bad[0]}")
    if rep.euler != 1:
        rep.errors.append(f"Euler characteristic {rep.euler} != 1")
    if alpha > ASPECT_WARN:
        rep.warnings.append(f"aspect ratio {alpha:.3g} exceeds {ASPECT_WARN:g}; shape regularity violated")
    return rep


# ----------------------------------------------------------------------------
# I/O


def mesh_to_json(mesh: PolygonalMesh) -> str:
    verts = ",\n    ".join(f"[{x!r}, {y!r}]" for x, y in mesh.vertices.tolist())
    cells = ",\n    ".join(json.dumps(c.tolist()) for c in mesh.cells)
    return f'{{\n  "vertices": [\n    {verts}\n  ],\n  "cells": [\n    {cells}\n  ]\n}}\n'


def write_mesh(mesh: PolygonalMesh, path) -> None:
    Path(path).write_text(mesh_to_json(mesh), encoding="utf-8")


def mesh_from_json(text: str, check: bool = True) -> PolygonalMesh:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ParseError("top level: expected an object with 'vertices' and 'cells'")
    for key in ("vertices", "cells"):
        if key not in data or not isinstance(data[key], list):
            raise ParseError(f"field '{key}': missing or not a list")
    verts = data["vertices"]
    for i, v in enumerate(verts):
        if (not isinstance(v, list) or len(v) != 2
                or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v)):
            raise ParseError(f"vertices[{i}]: expected [x, y] numbers, got {v!r}")
    for k, c in enumerate(data["cells"]):
        if not isinstance(c, list) or len(c) < 3:
            raise ParseError(f"cells[{k}]: expected a list of at least 3 vertex indices")
        for j, v in enumerate(c):
            if not isinstance(v, int) or isinstance(v, bool):
                raise ParseError(f"cells[{k}][{j}]: expected an integer, got {v!r}")
            if not 0 <= v < len(verts):
                raise ParseError(f"cells[{k}][{j}]: vertex index {v} out of range 0..{len(verts) - 1}")
    mesh = PolygonalMesh.from_cells(verts, data["cells"])
    if check:
        rep = validate(mesh)
        topo = [e for e in rep.errors if "Euler" in e or "facet" in e]
        if topo:
            raise TopologyError("; ".join(topo))
    return mesh


def read_mesh(path, check: bool = True) -> PolygonalMesh:
    return mesh_from_json(Path(path).read_text(encoding="utf-8"), check=check)
