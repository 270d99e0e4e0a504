"""Discrete de Rham operators on a polygonal mesh.

Degrees of freedom: nodal values, facet fluxes ``int_F v . n`` with the mesh's
fixed facet normal, and cell averages.  Vector nodal fields are ordered
component-major: all x-components, then all y-components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sps

from .mesh import PolygonalMesh

DENSE_RANK_CAP = 5000


@dataclass(frozen=True)
class DofMap:
    n_nodes: int
    n_facets: int
    n_cells: int

    @classmethod
    def of(cls, mesh: PolygonalMesh) -> "DofMap":
        return cls(mesh.n_nodes, mesh.n_facets, mesh.n_cells)

    def vector_node(self, component: int, node) -> np.ndarray:
        return component * self.n_nodes + np.asarray(node)


def curl_matrix(mesh: PolygonalMesh) -> sps.csr_matrix:
    """Facet-by-node incidence: ``+1`` at the head, ``-1`` at the tail."""
    nf = mesh.n_facets
    rows = np.repeat(np.arange(nf), 2)
    cols = mesh.facets.ravel()
    vals = np.tile([-1.0, 1.0], nf)
    return sps.csr_matrix((vals, (rows, cols)), shape=(nf, mesh.n_nodes))


def signed_incidence(mesh: PolygonalMesh) -> sps.csr_matrix:
    """Cell-by-facet matrix of orientation signs (``+1`` for outward normal)."""
    rows = np.concatenate([np.full(len(f), k) for k, f in enumerate(mesh.cell_facets)])
    cols = np.concatenate(mesh.cell_facets)
    vals = np.concatenate(mesh.cell_signs)
    return sps.csr_matrix((vals, (rows, cols)), shape=(mesh.n_cells, mesh.n_facets))


def div_matrix(mesh: PolygonalMesh) -> sps.csr_matrix:
    """Maps facet fluxes to cell-average divergence."""
    return sps.diags(1.0 / mesh.cell_areas) @ signed_incidence(mesh)


def transfer_matrix(mesh: PolygonalMesh) -> sps.csr_matrix:
    """Facet interpolant of a continuous, edgewise-linear nodal vector field.

    ``dof_F = |F| n . (w(a) + w(b)) / 2`` for facet ``a -> b``.
    """
    nf, nn = mesh.n_facets, mesh.n_nodes
    ln = mesh.facet_lengths[:, None] * mesh.facet_normals
    a, b = mesh.facets[:, 0], mesh.facets[:, 1]
    rows = np.repeat(np.arange(nf), 4)
    cols = np.column_stack([a, b, nn + a, nn + b]).ravel()
    vals = 0.5 * np.column_stack([ln[:, 0], ln[:, 0], ln[:, 1], ln[:, 1]]).ravel()
    return sps.csr_matrix((vals, (rows, cols)), shape=(nf, 2 * nn))


def interpolate_nodal(mesh: PolygonalMesh, func: Callable) -> np.ndarray:
    return np.asarray(func(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float)


def interpolate_facet(mesh: PolygonalMesh, field: Callable, points: int = 5) -> np.ndarray:
    """Facet dofs ``int_F v . n`` by ``points``-point Gauss-Legendre quadrature.

    Five points integrate polynomials of degree 9 exactly, which keeps the
    trigonometric test fields below ``1e-10`` already on ``diamond:4``.
    ``field(x, y)`` must accept arrays and return the pair ``(v_x, v_y)``.
    """
    t, w = np.polynomial.legendre.leggauss(points)
    s = 0.5 * (t + 1.0)
    pa = mesh.vertices[mesh.facets[:, 0]]
    pb = mesh.vertices[mesh.facets[:, 1]]
    pts = pa[:, None, :] + s[None, :, None] * (pb - pa)[:, None, :]
    vx, vy = field(pts[..., 0], pts[..., 1])
    vx = np.broadcast_to(vx, pts.shape[:2])
    vy = np.broadcast_to(vy, pts.shape[:2])
    n = mesh.facet_normals
    vn = vx * n[:, 0, None] + vy * n[:, 1, None]
    return 0.5 * mesh.facet_lengths * (vn @ w)


@dataclass
class ComplexReport:
    max_dc: float
    rank_curl: int
    rank_div: int
    dim_ker_div: int
    commuting_error: float
    dense: bool
    n_nodes: int
    n_facets: int
    n_cells: int

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "div_curl_zero": self.max_dc == 0.0,
            "rank_curl": self.rank_curl == self.n_nodes - 1,
            "rank_div": self.rank_div == self.n_cells,
            "exactness": self.dim_ker_div == self.rank_curl,
            "commuting": self.commuting_error <= 1e-10,
        }

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _commuting_error(mesh: PolygonalMesh, points: int = 5) -> float:
    pi = np.pi
    # (potential, its curl = (-dv/dy, dv/dx))
    cases = [
        (lambda x, y: x, lambda x, y: (0.0 * x, 1.0 + 0.0 * x)),
        (lambda x, y: y, lambda x, y: (-1.0 + 0.0 * x, 0.0 * x)),
        (lambda x, y: x * y, lambda x, y: (-x, y)),
        (lambda x, y: np.sin(pi * x) * np.sin(pi * y),
         lambda x, y: (-pi * np.sin(pi * x) * np.cos(pi * y), pi * np.cos(pi * x) * np.sin(pi * y))),
    ]
    C = curl_matrix(mesh)
    err = 0.0
    for pot, crl in cases:
        lhs = interpolate_facet(mesh, crl, points)
        rhs = C @ interpolate_nodal(mesh, pot)
        err = max(err, float(np.abs(lhs - rhs).max()))
    return err


def verify_complex(mesh: PolygonalMesh, dense_cap: int = DENSE_RANK_CAP) -> ComplexReport:
    """Check ``div curl = 0``, the ranks/exactness of the sequence
    nodes -> facets -> cells, and the commuting property of the interpolants.

    Above ``dense_cap`` facets the ranks are inferred from the Euler count.
    """
    C = curl_matrix(mesh)
    B = signed_incidence(mesh)
    D = div_matrix(mesh)
    DC = (D @ C).tocoo()
    max_dc = float(np.abs(DC.data).max()) if DC.nnz else 0.0
    dense = mesh.n_facets <= dense_cap
    if dense:
        rank_c = int(np.linalg.matrix_rank(C.toarray()))
        rank_d = int(np.linalg.matrix_rank(B.toarray()))
    else:
        rank_c = mesh.n_nodes - 1
        rank_d = mesh.n_cells
    dim_ker_d = mesh.n_facets - rank_d
    return ComplexReport(max_dc, rank_c, rank_d, dim_ker_d, _commuting_error(mesh),
                         dense, mesh.n_nodes, mesh.n_facets, mesh.n_cells)
