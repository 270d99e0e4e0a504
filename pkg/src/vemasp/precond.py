"""Smoothers and nodal auxiliary space preconditioners for the facet space.

The additive preconditioner is

    B = S^{-1} + T A_1^{-1} T^T + C A_2^{-1} C^T

with ``S`` a diagonal smoother, ``T`` the transfer from continuous nodal
vector fields, ``C`` the discrete curl and ``A_1``/``A_2`` the vector/scalar
nodal H1 matrices.  All operators are ``scipy.sparse.linalg.LinearOperator``
instances carrying a ``symmetric`` flag.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .complex_ops import curl_matrix, transfer_matrix
from .mesh import PolygonalMesh
from .problems import AssembledSystem, assemble_nodal_h1


class NonPositiveDiagonal(ValueError):
    pass


class FactorizationFailure(RuntimeError):
    pass


@dataclass
class Smoother:
    d: np.ndarray
    kind: str

    def __post_init__(self):
        if not np.all(self.d > 0):
            raise NonPositiveDiagonal(f"{self.kind} smoother has non-positive entries")

    def solve(self, r: np.ndarray) -> np.ndarray:
        return r / self.d if r.ndim == 1 else r / self.d[:, None]


def smoother_diag(A) -> Smoother:
    """Jacobi smoother: the energies of the individual scaled basis functions."""
    d = np.asarray(A.diagonal(), dtype=float).copy()
    if not np.all(d > 0):
        raise NonPositiveDiagonal("matrix diagonal has non-positive entries")
    return Smoother(d, "diag")


def smoother_stab(mesh: PolygonalMesh) -> Smoother:
    """Stabilization smoother ``sum_K ||h^{-1} v||^2_{S,K}``, which for facet
    dofs reduces to ``d_F = sum_{K ∋ F} diam(K)^{-1} / |F|``."""
    d = np.zeros(mesh.n_facets)
    diams = mesh.cell_diameters
    for k, fids in enumerate(mesh.cell_facets):
        np.add.at(d, fids, 1.0 / diams[k])
    return Smoother(d / mesh.facet_lengths, "stab")


def make_smoother(kind: str, A, mesh: PolygonalMesh) -> Smoother:
    if kind == "diag":
        return smoother_diag(A)
    if kind == "stab":
        return smoother_stab(mesh)
    raise ValueError(f"unknown smoother {kind!r}")


class SPDSolver:
    """Direct sparse factorization of an SPD matrix, done once.

    SuperLU runs in symmetric mode with diagonal pivoting so that a positive
    pivot sequence certifies definiteness, like a Cholesky factorization.
    """

    def __init__(self, A):
        A = sps.csc_matrix(A)
        try:
            self.lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                options={"SymmetricMode": True})
        except RuntimeError as exc:
            raise FactorizationFailure(str(exc)) from None
        if not np.all(self.lu.U.diagonal() > 0):
            raise FactorizationFailure("auxiliary operator is not positive definite")
        self.shape = A.shape

    def __call__(self, r):
        return self.lu.solve(np.asarray(r, dtype=float))


class Preconditioner(spla.LinearOperator):
    """Base class: subclasses implement ``_apply`` on 1D or 2D arrays."""

    symmetric = False

    def __init__(self, n: int):
        super().__init__(dtype=np.float64, shape=(n, n))

    def apply(self, r: np.ndarray) -> np.ndarray:
        return self._apply(np.asarray(r, dtype=float))

    def _matvec(self, x):
        return self._apply(np.asarray(x, dtype=float).reshape(-1))

    def _matmat(self, X):
        return self._apply(np.asarray(X, dtype=float))

    def _adjoint(self):
        if self.symmetric:
            return self
        return super()._adjoint()


class DiagonalPreconditioner(Preconditioner):
    symmetric = True

    def __init__(self, d: np.ndarray):
        d = np.asarray(d, dtype=float)
        if not np.all(d > 0):
            raise NonPositiveDiagonal("diagonal preconditioner needs positive entries")
        super().__init__(len(d))
        self.d = d

    def _apply(self, r):
        return r / self.d if r.ndim == 1 else r / self.d[:, None]


class AdditivePreconditioner(Preconditioner):
    """``S^{-1} + sum_j pi_j A_j^{-1} pi_j^T``."""

    symmetric = True

    def __init__(self, smoother: Smoother, spaces: Sequence[tuple[sps.spmatrix, Callable]]):
        super().__init__(len(smoother.d))
        self.smoother = smoother
        self.spaces = list(spaces)

    def _apply(self, r):
        z = self.smoother.solve(r)
        for pi, solve in self.spaces:
            z = z + pi @ solve(pi.T @ r)
        return z


class MultiplicativePreconditioner(Preconditioner):
    """Sequential smoother and auxiliary corrections.

    ``z_0 = S^{-1} r_0``; for each auxiliary space the residual is updated
    with the latest correction ``delta``, ``r_j = r_{j-1} - A delta_{j-1}``
    (so ``r_j = r_0 - A z_{j-1}``), then ``z_j = z_{j-1} + pi_j A_j^{-1}
    pi_j^T r_j``.  The result ``z_J`` is not symmetric in general.
    """

    def __init__(self, A, smoother: Smoother, spaces):
        super().__init__(A.shape[0])
        self.A = A
        self.smoother = smoother
        self.spaces = list(spaces)

    def _apply(self, r0):
        delta = self.smoother.solve(r0)
        z, r = delta, r0
        for pi, solve in self.spaces:
            r = r - self.A @ delta
            delta = pi @ solve(pi.T @ r)
            z = z + delta
        return z


class BlockDiagonalPreconditioner(Preconditioner):
    """``diag(B_u, M_p^{-1})`` for the Darcy saddle system."""

    symmetric = True

    def __init__(self, facet_block: spla.LinearOperator, cell_mass: np.ndarray):
        nf = facet_block.shape[0]
        super().__init__(nf + len(cell_mass))
        self.facet_block = facet_block
        self.cell_mass = np.asarray(cell_mass, dtype=float)
        self.nf = nf
        self.symmetric = bool(getattr(facet_block, "symmetric", False))

    def _apply(self, r):
        ru, rp = r[: self.nf], r[self.nf:]
        zu = self.facet_block @ ru
        zp = rp / self.cell_mass if r.ndim == 1 else rp / self.cell_mass[:, None]
        return np.concatenate([zu, zp], axis=0)


@dataclass
class AuxiliarySpaces:
    """Transfers and factorized nodal H1 operators of a mesh, built once."""

    transfer: sps.csr_matrix
    curl: sps.csr_matrix
    solve_scalar: SPDSolver

    @classmethod
    def build(cls, mesh: PolygonalMesh, stiffness: str = "drecipe") -> "AuxiliarySpaces":
        return cls(transfer_matrix(mesh), curl_matrix(mesh),
                   SPDSolver(assemble_nodal_h1(mesh, stiffness=stiffness)))

    def solve_vector(self, r):
        # A_1 = diag(A_2, A_2) in component-major ordering
        n = self.solve_scalar.shape[0]
        return np.concatenate([self.solve_scalar(r[:n]), self.solve_scalar(r[n:])], axis=0)

    def spaces(self):
        return [(self.transfer, self.solve_vector), (self.curl, self.solve_scalar)]


def build_additive(A, mesh: PolygonalMesh, smoother: str = "diag",
                   aux: AuxiliarySpaces | None = None) -> AdditivePreconditioner:
    aux = aux or AuxiliarySpaces.build(mesh)
    return AdditivePreconditioner(make_smoother(smoother, A, mesh), aux.spaces())


def build_multiplicative(A, mesh: PolygonalMesh, smoother: str = "diag",
                         aux: AuxiliarySpaces | None = None) -> MultiplicativePreconditioner:
    aux = aux or AuxiliarySpaces.build(mesh)
    return MultiplicativePreconditioner(A, make_smoother(smoother, A, mesh), aux.spaces())


def build_darcy_block(facet_block: spla.LinearOperator, mesh: PolygonalMesh):
    return BlockDiagonalPreconditioner(facet_block, mesh.cell_areas)


def build_diag_reference(system: AssembledSystem) -> DiagonalPreconditioner:
    """Inverse diagonal of ``A``, or of ``diag(M_u, M_p)`` for Darcy."""
    d = np.asarray(system.matrix.diagonal(), dtype=float).copy()
    if system.kind == "darcy":
        # the pressure block of the saddle matrix is zero; use M_p = diag(|K|)
        d[system.dofs.n_facets:] = system.cell_mass
    if not np.all(d > 0):
        raise NonPositiveDiagonal("reference diagonal has non-positive entries")
    return DiagonalPreconditioner(d)

