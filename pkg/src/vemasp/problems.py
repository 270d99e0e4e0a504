"""Global assembly of the H(div) projection and Darcy systems, the nodal H1
auxiliary operators, and the manufactured data of the experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sps

from .complex_ops import DofMap, div_matrix, signed_incidence
from .mesh import PolygonalMesh
from .vem_local import facet_mass, facet_projection, fan_quadrature, nodal_mass, nodal_stiffness

QUAD_ORDER = 5


class UnknownField(KeyError):
    pass


@dataclass
class AssembledSystem:
    matrix: sps.csr_matrix
    rhs: np.ndarray
    dofs: DofMap
    kind: str  # "projection" or "darcy"
    cell_mass: np.ndarray | None = None  # diag of M_p, Darcy only

    @property
    def block_sizes(self) -> tuple[int, ...]:
        if self.kind == "darcy":
            return (self.dofs.n_facets, self.dofs.n_cells)
        return (self.dofs.n_facets,)


def _scatter(blocks, index_sets, n):
    rows = np.concatenate([np.repeat(idx, len(idx)) for idx in index_sets])
    cols = np.concatenate([np.tile(idx, len(idx)) for idx in index_sets])
    vals = np.concatenate([b.ravel() for b in blocks])
    # COO -> CSR sums duplicates in a fixed order, so the result is reproducible
    return sps.csr_matrix((vals, (rows, cols)), shape=(n, n))


def facet_mass_matrix(mesh: PolygonalMesh, stab_scale: str = "facet") -> sps.csr_matrix:
    blocks = []
    for k in range(mesh.n_cells):
        blocks.append(facet_mass(mesh.cell_coords(k), mesh.cell_signs[k], stab_scale).mass)
    return _scatter(blocks, mesh.cell_facets, mesh.n_facets)


def div_div_matrix(mesh: PolygonalMesh) -> sps.csr_matrix:
    D = div_matrix(mesh)
    return (D.T @ sps.diags(mesh.cell_areas) @ D).tocsr()


def assemble_projection(mesh: PolygonalMesh, stab_scale: str = "facet") -> sps.csr_matrix:
    """Matrix of ``(v, w)_h + (div v, div w)`` on the facet space."""
    A = facet_mass_matrix(mesh, stab_scale) + div_div_matrix(mesh)
    return ((A + A.T) * 0.5).tocsr()


def assemble_rhs_projection(mesh: PolygonalMesh, f: Callable) -> np.ndarray:
    """Load vector ``(f, Pi w)`` with ``Pi`` the cellwise projection of the
    facet basis onto ``span{e_x, e_y, x_K}``."""
    b = np.zeros(mesh.n_facets)
    _, centroids, _ = mesh.geometry
    for k in range(mesh.n_cells):
        xy = mesh.cell_coords(k)
        P = facet_projection(xy, mesh.cell_signs[k])
        pts, w = fan_quadrature(xy, QUAD_ORDER, center=centroids[k])
        fx, fy = f(pts[:, 0], pts[:, 1])
        fx = np.broadcast_to(fx, w.shape)
        fy = np.broadcast_to(fy, w.shape)
        xk = pts - centroids[k]
        moments = np.array([w @ fx, w @ fy, w @ (fx * xk[:, 0] + fy * xk[:, 1])])
        np.add.at(b, mesh.cell_facets[k], P.T @ moments)
    return b


def cell_integrals(mesh: PolygonalMesh, g: Callable) -> np.ndarray:
    out = np.empty(mesh.n_cells)
    _, centroids, _ = mesh.geometry
    for k in range(mesh.n_cells):
        pts, w = fan_quadrature(mesh.cell_coords(k), QUAD_ORDER, center=centroids[k])
        out[k] = w @ np.broadcast_to(g(pts[:, 0], pts[:, 1]), w.shape)
    return out


def assemble_darcy(mesh: PolygonalMesh, f: Callable, g: Callable) -> AssembledSystem:
    """Saddle system ``[[M_u, -B^T], [-B, 0]]`` with ``B[K, F] = sign(K, F)``.

    Pressures are cell averages, so ``(q, div u) = sum_K q_K sum_F sign dof_F``.
    """
    M = facet_mass_matrix(mesh)
    B = signed_incidence(mesh)
    K = sps.bmat([[M, -B.T], [-B, None]], format="csr")
    rhs = np.concatenate([assemble_rhs_projection(mesh, f), cell_integrals(mesh, g)])
    return AssembledSystem(K, rhs, DofMap.of(mesh), "darcy", mesh.cell_areas.copy())


def assemble_projection_system(mesh: PolygonalMesh, f: Callable) -> AssembledSystem:
    return AssembledSystem(assemble_projection(mesh), assemble_rhs_projection(mesh, f),
                           DofMap.of(mesh), "projection")


def assemble_nodal_h1(mesh: PolygonalMesh, vector: bool = False,
                      stiffness: str = "drecipe") -> sps.csr_matrix:
    """Full H1 inner product (stiffness + mass) on the nodal space.

    ``stiffness`` selects the local stabilization (see ``nodal_stiffness``).
    The default ``"drecipe"`` coincides with the plain dof-dof choice on
    shape-regular cells and keeps the auxiliary preconditioners robust on
    sliver cells.
    With ``vector=True`` returns two uncoupled copies, component-major.
    """
    blocks = []
    for k in range(mesh.n_cells):
        xy = mesh.cell_coords(k)
        blocks.append(nodal_stiffness(xy, stiffness) + nodal_mass(xy))
    A2 = _scatter(blocks, mesh.cells, mesh.n_nodes)
    A2 = ((A2 + A2.T) * 0.5).tocsr()
    if vector:
        return sps.block_diag([A2, A2], format="csr")
    return A2


# ----------------------------------------------------------------------------
# manufactured data

_PI = np.pi


def _f1(x, y):
    return (-2 * _PI * np.cos(2 * _PI * x) * np.sin(4 * _PI * y),
            -4 * _PI * np.cos(4 * _PI * y) * np.sin(2 * _PI * x))


def _g1(x, y):
    return -40 * _PI**2 * np.cos(2 * _PI * x) * np.sin(4 * _PI * y)


def _f2(x, y):
    return np.cos(x) * np.sinh(y), np.sin(x) * np.cosh(y)


def _g2(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


FIELDS: dict[str, Callable] = {"f1": _f1, "g1": _g1, "f2": _f2, "g2": _g2}


def data_library() -> dict[str, Callable]:
    return dict(FIELDS)


def get_field(name: str) -> Callable:
    try:
        return FIELDS[name]
    except KeyError:
        raise UnknownField(f"unknown field {name!r}; choose from {sorted(FIELDS)}") from None


def darcy_data(name: str) -> tuple[Callable, Callable]:
    """``f1`` pairs with ``g1``, ``f2`` with ``g2 = 0``."""
    f = get_field(name)
    return f, get_field("g" + name[1:])
