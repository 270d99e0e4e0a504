"""Unrestarted left-preconditioned GMRES and spectral condition numbers."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

DEFAULT_DENSE_CAP = 8000
_TINY = np.finfo(float).tiny
_EPS = np.finfo(float).eps


class DimensionExceedsCap(RuntimeError):
    """Raised when a dense eigensolve is refused and no estimator applies."""


def dense_cap() -> int:
    """Dense condition-number cap, overridable with ``VEMASP_DENSE_CAP``."""
    raw = os.environ.get("VEMASP_DENSE_CAP")
    if raw is None:
        return DEFAULT_DENSE_CAP
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"VEMASP_DENSE_CAP must be an integer, got {raw!r}") from None


def _apply(op, x):
    if op is None:
        return x
    return op @ x


@dataclass
class SolveResult:
    """Outcome of a GMRES run.

    ``history[k]`` is the relative preconditioned residual after ``k``
    iterations, so ``iterations == len(history) - 1``.  A residual that is
    exactly zero is recorded as the smallest positive double.
    """

    x: np.ndarray
    iterations: int
    history: np.ndarray
    converged: bool
    breakdown: bool = False
    message: str = ""


def gmres(A, b: np.ndarray, B=None, tol: float = 1e-8, maxit: int = 2000,
          x0: np.ndarray | None = None) -> SolveResult:
    """Solve ``A x = b`` by GMRES on the left-preconditioned system ``BA x = Bb``.

    The Arnoldi basis is orthogonalized by classical Gram-Schmidt with one
    full reorthogonalization pass and grows without restarts.  Iteration
    stops once ``||B(b - A x_k)|| <= tol ||B b||``.  Reaching ``maxit`` or an
    Arnoldi breakdown short of the tolerance returns the current iterate with
    ``converged=False`` instead of raising.

    Args:
        A: Matrix or linear operator supporting ``A @ x``.
        b: Right-hand side.
        B: Preconditioner supporting ``B @ r``; ``None`` means identity.
        tol: Relative tolerance on the preconditioned residual.
        maxit: Maximum number of Arnoldi steps.
        x0: Initial guess, zero by default.

    Returns:
        SolveResult with the iterate and residual history.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"operator shape {A.shape} does not match rhs length {n}")
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()

    pb_norm = np.linalg.norm(_apply(B, b))
    if pb_norm == 0.0:
        return SolveResult(np.zeros(n), 0, np.array([_TINY]), True, message="zero right-hand side")
    r = _apply(B, b - A @ x0)
    beta = np.linalg.norm(r)
    history = [max(beta / pb_norm, _TINY)]
    if history[0] <= tol:
        return SolveResult(x0, 0, np.array(history), True)

    cap = min(maxit, n) + 1
    width = min(cap, 64)
    V = np.empty((n, width))
    H = np.zeros((cap, cap - 1))
    cs = np.zeros(cap - 1)
    sn = np.zeros(cap - 1)
    g = np.zeros(cap)
    g[0] = beta
    V[:, 0] = r / beta

    converged = breakdown = False
    j = 0
    while j < min(maxit, n):
        w = _apply(B, A @ V[:, j])
        w_norm = np.linalg.norm(w)
        Vj = V[:, : j + 1]
        h = Vj.T @ w
        w -= Vj @ h
        h2 = Vj.T @ w
        w -= Vj @ h2
        h += h2
        h_next = np.linalg.norm(w)

        col = np.empty(j + 2)
        col[: j + 1] = h
        col[j + 1] = h_next
        for i in range(j):
            t = cs[i] * col[i] + sn[i] * col[i + 1]
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1]
            col[i] = t
        rho = np.hypot(col[j], col[j + 1])
        if rho == 0.0:
            breakdown = True
            break
        cs[j], sn[j] = col[j] / rho, col[j + 1] / rho
        col[j], col[j + 1] = rho, 0.0
        H[: j + 2, j] = col
        g[j + 1] = -sn[j] * g[j]
        g[j] *= cs[j]
        j += 1
        history.append(max(abs(g[j]) / pb_norm, _TINY))

        if history[-1] <= tol:
            converged = True
            break
        if h_next <= _EPS * w_norm:
            # new direction is rounding noise: the Krylov space is invariant
            breakdown = True
            break
        if j + 1 > V.shape[1]:
            V = np.concatenate([V, np.empty((n, min(V.shape[1], cap - V.shape[1])))], axis=1)
        V[:, j] = w / h_next

    x = x0
    if j > 0:
        y = sla.solve_triangular(H[:j, :j], g[:j])
        x = x0 + V[:, :j] @ y
    if converged:
        message = "converged"
    elif breakdown:
        message = "Arnoldi breakdown before reaching the tolerance"
    else:
        message = f"maximum of {maxit} iterations reached"
    return SolveResult(x, j, np.array(history), converged, breakdown, message)


# ----------------------------------------------------------------------------
# condition numbers


@dataclass
class ConditionEstimate:
    """Spectral condition number ``max|lambda| / min|lambda|`` of ``BA``.

    ``method`` is one of ``"dense-symmetric"``, ``"dense-general"``,
    ``"lanczos"`` or ``"arpack"``; the last two set ``estimate``.
    """

    value: float
    lam_min: float
    lam_max: float
    method: str
    estimate: bool = False
    extra: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return float(self.value)


def _materialize(op, n: int, block: int = 256) -> np.ndarray:
    """Dense matrix of ``op``, applied to identity columns a block at a time."""
    if op is None:
        return np.eye(n)
    if sps.issparse(op):
        return op.toarray()
    out = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        E = np.zeros((n, stop - start))
        E[np.arange(start, stop), np.arange(stop - start)] = 1.0
        out[:, start:stop] = op @ E
    return out


def _symmetrize_lower(M: np.ndarray, block: int = 512) -> None:
    """Overwrite the lower triangle of ``M`` with that of ``(M + M^T) / 2``."""
    n = M.shape[0]
    for i in range(0, n, block):
        I = slice(i, min(i + block, n))
        for j in range(0, i + 1, block):
            J = slice(j, min(j + block, n))
            M[I, J] = 0.5 * (M[I, J] + M[J, I].T)


def _scaling(A) -> np.ndarray:
    d = np.abs(np.asarray(A.diagonal(), dtype=float)).copy()
    d[d == 0.0] = 1.0
    return np.sqrt(d)


def _is_symmetric_op(B) -> bool:
    if B is None:
        return True
    if sps.issparse(B):
        return abs(B - B.T).max() == 0 if B.nnz else True
    return bool(getattr(B, "symmetric", False))


def _dense_symmetric(A, B) -> ConditionEstimate:
    # Jacobi-equilibrate A, then reduce B A to L^T A_hat L with B_hat = L L^T.
    # Dense work arrays are reused in place; only the lower triangles of the
    # symmetric matrices are read.
    A = sps.csr_matrix(A)
    n = A.shape[0]
    if B is None:
        lam = sla.eigvalsh(A.toarray(), overwrite_a=True, check_finite=False)
        a = np.abs(lam)
        if a.min() <= 1e3 * _EPS * a.max():
            # the dense smallest eigenvalue is rounding noise; shift-invert
            # through a sparse LU resolves it on graded matrices
            near0 = spla.eigsh(A.tocsc(), k=1, sigma=0.0, which="LM",
                               return_eigenvectors=False)[0]
            return ConditionEstimate(float(a.max() / abs(near0)), float(abs(near0)),
                                     float(a.max()), "dense-symmetric",
                                     extra={"refined_min": True})
    else:
        s = _scaling(A)
        A_hat = sps.diags(1.0 / s) @ A @ sps.diags(1.0 / s)
        L = _materialize(B, n)
        L *= s[:, None]
        L *= s[None, :]
        # rounding makes B slightly nonsymmetric; when B is nearly singular
        # the factorization only succeeds on the symmetric part
        _symmetrize_lower(L)
        try:
            L = sla.cholesky(L, lower=True, overwrite_a=True, check_finite=False)
        except np.linalg.LinAlgError:
            # B is positive definite in exact arithmetic but singular to
            # working precision (tiny cut cells); the spectrum of BA is still
            # well defined, so fall back to the nonsymmetric eigensolver
            del L
            est = _dense_general(A, B)
            est.extra["cholesky_fallback"] = True
            return est
        K = L.T @ np.asarray(A_hat @ L)
        del L
        lam = sla.eigvalsh(K, overwrite_a=True, check_finite=False)
    a = np.abs(lam)
    return ConditionEstimate(float(a.max() / a.min()), float(a.min()), float(a.max()),
                             "dense-symmetric", extra={"negative": int((lam < 0).sum())})


def _dense_general(A, B) -> ConditionEstimate:
    A = sps.csr_matrix(A)
    n = A.shape[0]
    s = _scaling(A)
    # similarity with diag(s) keeps the spectrum and improves the scaling
    A_hat = sps.diags(1.0 / s) @ A @ sps.diags(1.0 / s)
    Bs = _materialize(B, n)
    Bs *= s[:, None]
    Bs *= s[None, :]
    BA = np.asarray((A_hat.T @ Bs.T).T)
    del Bs
    lam = sla.eigvals(BA, overwrite_a=True, check_finite=False)
    a = np.abs(lam)
    return ConditionEstimate(float(a.max() / a.min()), float(a.min()), float(a.max()),
                             "dense-general", extra={"max_imag": float(np.abs(lam.imag).max())})


def lanczos_extremes(A, B, steps: int = 300, rtol: float = 1e-6,
                     seed: int = 0) -> tuple[float, float, int]:
    """Extreme eigenvalues of ``BA`` for SPD ``A`` and symmetric ``B``.

    ``BA`` is self-adjoint in the ``A`` inner product, so Lanczos runs in that
    inner product with full reorthogonalization.  Stops when both Ritz
    extremes change by less than ``rtol`` over ten steps.
    """
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    Av = A @ v
    nrm = np.sqrt(v @ Av)
    v, Av = v / nrm, Av / nrm
    V, AV = [v], [Av]
    alpha, beta = [], []
    lo = hi = None
    trail: list[tuple[float, float]] = []
    for k in range(min(steps, n)):
        w = B @ AV[-1]
        Vm = np.column_stack(V)
        AVm = np.column_stack(AV)
        c = AVm.T @ w
        w -= Vm @ c
        w -= Vm @ (AVm.T @ w)
        alpha.append(c[-1])
        Aw = A @ w
        b = np.sqrt(max(w @ Aw, 0.0))
        T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
        ritz = np.linalg.eigvalsh(T)
        lo, hi = ritz[0], ritz[-1]
        trail.append((lo, hi))
        if len(trail) > 10:
            lo0, hi0 = trail[-11]
            if abs(lo - lo0) <= rtol * abs(lo) and abs(hi - hi0) <= rtol * abs(hi):
                return float(lo), float(hi), k + 1
        if b <= 1e-12 * max(abs(hi), 1.0):
            return float(lo), float(hi), k + 1
        beta.append(b)
        V.append(w / b)
        AV.append(Aw / b)
    return float(lo), float(hi), min(steps, n)


def _arpack_extremes(M) -> tuple[float, float]:
    lam_max = spla.eigsh(M, k=1, which="LA", return_eigenvectors=False, tol=1e-8)[0]
    lam_min = spla.eigsh(M.tocsc(), k=1, sigma=0.0, which="LM", return_eigenvectors=False,
                         tol=1e-8)[0]
    return float(lam_min), float(lam_max)


def condition_number(A, B=None, cap: int | None = None, estimate: bool = True,
                     symmetric: bool | None = None) -> ConditionEstimate:
    """Spectral condition number of ``BA`` (or of ``A`` when ``B`` is None).

    Up to ``cap`` unknowns the spectrum is computed densely: symmetric
    preconditioners use an equilibrated Cholesky reduction and ``eigvalsh``,
    nonsymmetric ones the full eigenvalue set of ``BA``.  Above the cap, SPD
    ``A`` with a symmetric preconditioner is estimated iteratively when
    ``estimate`` is true: ARPACK for the identity or a diagonal preconditioner,
    Lanczos in the ``A`` inner product otherwise.  All remaining cases raise
    :class:`DimensionExceedsCap`.

    Args:
        A: Sparse system matrix.
        B: Preconditioner or None.
        cap: Dense dimension cap; defaults to :func:`dense_cap`.
        estimate: Allow iterative estimates above the cap.
        symmetric: Override the preconditioner's ``symmetric`` flag.

    Returns:
        ConditionEstimate.
    """
    n = A.shape[0]
    cap = dense_cap() if cap is None else cap
    sym = _is_symmetric_op(B) if symmetric is None else symmetric
    if n <= cap:
        return _dense_symmetric(A, B) if sym else _dense_general(A, B)
    if not (estimate and sym):
        raise DimensionExceedsCap(f"{n} unknowns exceed the dense cap {cap}")
    A = sps.csr_matrix(A)
    if not np.all(A.diagonal() > 0):
        # saddle-point matrices: no inner product for Lanczos, no dense fallback
        raise DimensionExceedsCap(f"{n} unknowns exceed the dense cap {cap} and the "
                                  "matrix is not positive definite")
    diag = getattr(B, "d", None)
    if B is None or diag is not None:
        M = A if B is None else sps.diags(1.0 / np.sqrt(diag)) @ A @ sps.diags(1.0 / np.sqrt(diag))
        try:
            lo, hi = _arpack_extremes(sps.csr_matrix(M))
        except (RuntimeError, spla.ArpackNoConvergence) as exc:
            raise DimensionExceedsCap(f"ARPACK failed above the dense cap: {exc}") from None
        if lo <= 0:
            raise DimensionExceedsCap("iterative estimates need a positive definite matrix")
        return ConditionEstimate(hi / lo, lo, hi, "arpack", estimate=True)
    lo, hi, steps = lanczos_extremes(A, B)
    if lo <= 0:
        raise DimensionExceedsCap("iterative estimates need a positive definite matrix")
    return ConditionEstimate(hi / lo, lo, hi, "lanczos", estimate=True, extra={"steps": steps})
