"""Element matrices of the lowest-order nodal and facet virtual element spaces.

All routines take the vertex coordinates of one counterclockwise, convex
polygon.  Facet routines additionally take ``signs``: for local edge ``i``
(vertex ``i`` to ``i+1``) the factor that converts the global facet dof into
the outward flux of this cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import NonPositiveArea, polygon_area_centroid, polygon_diameter


class SingularGram(ValueError):
    pass


# Dunavant degree-5 rule on the reference triangle (barycentric, weights sum to 1)
_R15 = np.sqrt(15.0)
_B1, _B2 = (6.0 + _R15) / 21.0, (6.0 - _R15) / 21.0
_A1, _A2 = 1.0 - 2.0 * _B1, 1.0 - 2.0 * _B2
_TRI5_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
    [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2],
])
_TRI5_W = np.array([9 / 40] + [(155.0 + _R15) / 1200.0] * 3 + [(155.0 - _R15) / 1200.0] * 3)
# edge-midpoint rule, exact for quadratics
_TRI2_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
_TRI2_W = np.full(3, 1 / 3)


def _check_cell(xy):
    area, c = polygon_area_centroid(xy)
    if not area > 0.0:
        raise NonPositiveArea(f"cell area {area:g} is not positive")
    return area, c


def fan_quadrature(xy: np.ndarray, order: int = 5, center=None):
    """Quadrature points and weights on a polygon via a fan of triangles.

    The fan is anchored at ``center`` (the centroid by default), which is
    inside every convex cell.
    """
    if center is None:
        _, center = _check_cell(xy)
    bary, w = (_TRI2_BARY, _TRI2_W) if order <= 2 else (_TRI5_BARY, _TRI5_W)
    if order > 5:
        raise ValueError("fan quadrature supports order <= 5")
    a = xy
    b = np.roll(xy, -1, axis=0)
    # signed triangle areas, all positive for a convex CCW polygon
    tri_area = 0.5 * ((a[:, 0] - center[0]) * (b[:, 1] - center[1])
                      - (a[:, 1] - center[1]) * (b[:, 0] - center[0]))
    pts = (bary[:, 0, None, None] * center
           + bary[:, 1, None, None] * a[None]
           + bary[:, 2, None, None] * b[None])
    weights = w[:, None] * tri_area[None, :]
    return pts.reshape(-1, 2), weights.reshape(-1)


def polygon_moments(xy: np.ndarray, center=None) -> np.ndarray:
    """Exact integrals of ``[1, x, y, x^2, xy, y^2]`` with ``x`` measured from
    ``center`` (the centroid if omitted)."""
    _, c = _check_cell(xy)
    if center is None:
        center = c
    pts, w = fan_quadrature(xy, order=2, center=c)
    x = pts[:, 0] - center[0]
    y = pts[:, 1] - center[1]
    return np.array([w.sum(), w @ x, w @ y, w @ (x * x), w @ (x * y), w @ (y * y)])


# ----------------------------------------------------------------------------
# nodal space


@dataclass
class LocalNodalMatrices:
    stiffness: np.ndarray
    mass: np.ndarray
    projector: np.ndarray  # 3 x n_v, coefficients on {1, (x-c)/h, (y-c)/h}


def nodal_projector(xy: np.ndarray) -> np.ndarray:
    """Coefficients of the elliptic projection onto P1.

    Row ``a`` of the result maps vertex values to the coefficient of monomial
    ``a`` in ``{1, (x - c_x)/h, (y - c_y)/h}``.  The gradient part solves
    ``(grad Pv, grad p)_K = <v, grad p . n>_dK``; the constant part matches the
    vertex average.
    """
    area, c = _check_cell(xy)
    h = polygon_diameter(xy)
    nv = len(xy)
    e = np.roll(xy, -1, axis=0) - xy
    # |e_i| n_i for outward normals of a CCW polygon
    ln = np.column_stack([e[:, 1], -e[:, 0]])
    B = np.empty((3, nv))
    B[0] = 1.0 / nv
    B[1:] = (0.5 * (ln + np.roll(ln, 1, axis=0))).T / h
    D = np.column_stack([np.ones(nv), (xy - c) / h])
    G = B @ D
    if not np.isfinite(np.linalg.cond(G)) or np.linalg.cond(G) > 1e14:
        raise SingularGram("nodal projection Gram matrix is singular")
    return np.linalg.solve(G, B)


def _nodal_parts(xy):
    area, c = _check_cell(xy)
    h = polygon_diameter(xy)
    P = nodal_projector(xy)
    D = np.column_stack([np.ones(len(xy)), (xy - c) / h])
    I_minus = np.eye(len(xy)) - D @ P
    return area, h, P, I_minus


def nodal_stiffness(xy: np.ndarray, stabilization: str = "dofi") -> np.ndarray:
    """Local stiffness matrix of the nodal space.

    Args:
        xy: Vertex coordinates, counterclockwise.
        stabilization: How the non-polynomial part is stabilized.

            * ``"dofi"``: plain dof-dof product on ``(I - Pi)``.
            * ``"drecipe"``: dof-dof product weighted by
              ``max(1, K^c_ii)``, the diagonal of the consistency matrix.  It
              equals ``"dofi"`` on shape-regular cells and grows with the
              consistency term on slivers, where the plain product badly
              underestimates the energy of oscillating modes.
            * ``"curl"``: ``C_K^T M_K C_K``, the facet mass of the rotated
              gradient.  The rotated gradient maps the local nodal space into
              the local facet space, so this is exact up to the facet
              stabilization.

    Returns:
        Symmetric positive semidefinite ``n_v x n_v`` matrix whose kernel is
        the constants.
    """
    if stabilization == "curl":
        nv = len(xy)
        # outward flux of curl p across edge i -> i+1 is p_i - p_{i+1}
        C = np.eye(nv) - np.roll(np.eye(nv), 1, axis=1)
        K = C.T @ facet_mass(xy, np.ones(nv)).mass @ C
        return 0.5 * (K + K.T)
    area, h, P, I_minus = _nodal_parts(xy)
    # grad m_1 = e_x / h, grad m_2 = e_y / h
    grad_part = P[1:] * np.sqrt(area) / h
    K = grad_part.T @ grad_part
    if stabilization == "dofi":
        K = K + I_minus.T @ I_minus
    elif stabilization == "drecipe":
        weights = np.maximum(1.0, np.diag(K))
        K = K + I_minus.T @ (weights[:, None] * I_minus)
    else:
        raise ValueError(f"unknown nodal stabilization {stabilization!r}")
    return 0.5 * (K + K.T)


NODAL_STABILIZATIONS = ("dofi", "drecipe", "curl")


def nodal_mass(xy: np.ndarray) -> np.ndarray:
    area, h, P, I_minus = _nodal_parts(xy)
    mom = polygon_moments(xy)
    H = np.array([
        [mom[0], mom[1] / h, mom[2] / h],
        [mom[1] / h, mom[3] / h**2, mom[4] / h**2],
        [mom[2] / h, mom[4] / h**2, mom[5] / h**2],
    ])
    M = P.T @ H @ P + area * (I_minus.T @ I_minus)
    return 0.5 * (M + M.T)


def nodal_matrices(xy: np.ndarray, stabilization: str = "dofi") -> LocalNodalMatrices:
    return LocalNodalMatrices(nodal_stiffness(xy, stabilization), nodal_mass(xy),
                              nodal_projector(xy))


# ----------------------------------------------------------------------------
# facet space


@dataclass
class LocalFacetMass:
    mass: np.ndarray
    projection: np.ndarray  # 3 x n_F, coefficients (c_x, c_y, gamma) of c + gamma x_K
    stabilization: np.ndarray
    gram: np.ndarray  # L2 Gram matrix of {e_x, e_y, x_K}
    reconstruction: np.ndarray  # n_F x 3, facet dofs of the basis fields


def _facet_data(xy, signs):
    area, c = _check_cell(xy)
    signs = np.asarray(signs, dtype=float)
    a = xy
    b = np.roll(xy, -1, axis=0)
    e = b - a
    length = np.hypot(e[:, 0], e[:, 1])
    ln_out = np.column_stack([e[:, 1], -e[:, 0]])  # |F| n_out
    mid = 0.5 * (a + b)
    return area, c, signs, a, b, length, ln_out, mid


def facet_projection(xy: np.ndarray, signs) -> np.ndarray:
    """L2 projection of the facet basis onto ``span{e_x, e_y, x_K}``.

    Returns the ``3 x n_F`` matrix mapping facet dofs to ``(c_x, c_y, gamma)``.
    Only facet fluxes enter: the constant part uses ``int_K v = sum flux_F
    (m_F - c_K)`` and the ``x_K`` part integrates by parts against
    ``q = |x_K|^2 / 2``.
    """
    area, c, signs, a, b, length, ln_out, mid = _facet_data(xy, signs)
    q = lambda p: 0.5 * ((p - c) ** 2).sum(axis=-1)
    q_facet = length / 6.0 * (q(a) + 4.0 * q(mid) + q(b))  # Simpson, exact
    mom = polygon_moments(xy)
    q_cell = 0.5 * (mom[3] + mom[5])
    if not q_cell > 0:
        raise SingularGram("degenerate cell: vanishing second moment")

    P = np.empty((3, len(xy)))
    P[:2] = ((mid - c) * signs[:, None]).T / area
    div = signs / area
    P[2] = (-div * q_cell + signs * q_facet / length) / (2.0 * q_cell)
    return P


def facet_mass(xy: np.ndarray, signs, stab_scale: str = "facet") -> LocalFacetMass:
    """Facet mass: exact on ``span{e_x, e_y, x_K}`` plus a dof stabilization
    ``sum_F h_F dof_F(v) dof_F(w) / |F|`` on the remainder.

    ``stab_scale="facet"`` takes ``h_F = |F|`` (plain dof-dof product);
    ``"cell"`` takes ``h_F = diam(K)``.  Both are equivalent on shape-regular
    cells, but only the first stays bounded when a cell has a short facet.
    """
    area, c, signs, a, b, length, ln_out, mid = _facet_data(xy, signs)
    P = facet_projection(xy, signs)
    mom = polygon_moments(xy)
    G = np.diag([area, area, mom[3] + mom[5]])
    # global-normal dofs of e_x, e_y, x_K
    R = signs[:, None] * np.column_stack([
        ln_out[:, 0], ln_out[:, 1], (ln_out * (mid - c)).sum(axis=1)])
    I_minus = np.eye(len(xy)) - R @ P
    stab_form = np.diag(stabilization_weights(xy, stab_scale))
    S = I_minus.T @ stab_form @ I_minus
    M = P.T @ G @ P + S
    return LocalFacetMass(0.5 * (M + M.T), P, 0.5 * (S + S.T), G, R)


def stabilization_weights(xy: np.ndarray, stab_scale: str = "facet") -> np.ndarray:
    """Diagonal of the facet dof stabilization form, per local edge."""
    if stab_scale == "facet":
        return np.ones(len(xy))
    if stab_scale == "cell":
        e = np.roll(xy, -1, axis=0) - xy
        return polygon_diameter(xy) / np.hypot(e[:, 0], e[:, 1])
    raise ValueError(f"unknown stabilization scale {stab_scale!r}")
