"""Definiteness certificates and the smallest eigenpair of a sparse symmetric matrix."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla

log = logging.getLogger(__name__)

DENSE_MAX = 3000
DEFAULT_TOL = 1e-9
GUARD_FACTOR = 1e-12
PIVOT_FACTOR = 1e-13


class EigenError(RuntimeError):
    """Iteration cap hit; ``result`` holds the best estimate."""

    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


@dataclass
class EigenResult:
    lambda_min: float
    eigvec: np.ndarray
    residual: float
    method: str
    iterations: int = 0
    converged: bool = True
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lambda_min": self.lambda_min,
            "residual": self.residual,
            "method": self.method,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def inf_norm(A) -> float:
    if sp.issparse(A):
        return float(abs(A).sum(axis=1).max()) if A.shape[0] else 0.0
    return float(np.abs(A).sum(axis=1).max())


def guard(A) -> float:
    """Band around zero inside which a sign is not trusted."""
    return GUARD_FACTOR * inf_norm(A)


def gershgorin_lower(A) -> float:
    A = sp.csr_matrix(A)
    d = A.diagonal()
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
    return float((d - off).min())


def symmetric_pivots(A):
    """Pivots of a symmetric (no row interchange) sparse LU, or None.

    With the same fill-reducing permutation on rows and columns the pivots
    are the D of an LDL^T factorization, so their signs give the inertia.
    Returns None if the factorization broke down or had to pivot off the
    diagonal.
    """
    A = sp.csc_matrix(A)
    try:
        lu = sla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
    except RuntimeError:   # exactly singular
        return None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    return lu.U.diagonal()


def is_positive_definite(A) -> bool:
    """True iff a symmetric factorization with all pivots > 1e-13 ||A||_inf exists."""
    n = A.shape[0]
    if n == 0:
        return True
    if not sp.issparse(A):
        A = sp.csc_matrix(np.asarray(A, dtype=float))
    piv = symmetric_pivots(A)
    if piv is None:
        return False
    return bool((piv > PIVOT_FACTOR * inf_norm(A)).all())


def negative_count(A):
    """Number of negative pivots (negative eigenvalues), or None if unknown."""
    piv = symmetric_pivots(A)
    return None if piv is None else int((piv < 0).sum())


def _finish(A, lam, x, method, iterations, tol, converged=True):
    x = np.asarray(x, dtype=float).ravel()
    x = x / np.linalg.norm(x)
    Ax = A @ x
    # the Rayleigh quotient is second-order accurate in the eigenvector error
    rq = float(x @ Ax)
    if abs(rq - lam) <= max(abs(lam), 1.0) * 1e-6:
        lam = rq
    residual = float(np.linalg.norm(Ax - lam * x))
    ok = converged and residual <= tol * max(1.0, inf_norm(A))
    return EigenResult(float(lam), x, residual, method, iterations, ok)


def _dense(A, tol):
    M = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    w, V = la.eigh(M, subset_by_index=[0, 0])
    return _finish(A, w[0], V[:, 0], "dense", 1, tol)


def _shift_invert(A, tol, maxiter):
    A = sp.csc_matrix(A)
    n = A.shape[0]
    eye = sp.identity(n, format="csc")
    sigma = gershgorin_lower(A) - 1.0
    for attempt in range(6):
        shifted = (A - sigma * eye).tocsc()
        neg = negative_count(shifted)
        if neg == 0:
            break
        # shift not below the spectrum: move it down and refactor
        log.debug("shift %g is not below lambda_min (negatives=%s)", sigma, neg)
        sigma -= 2.0 ** attempt * max(1.0, abs(sigma))
    lu = sla.splu(shifted)
    op = sla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    counter = {"n": 0}

    def matvec(v):
        counter["n"] += 1
        return op.matvec(v)

    inv = sla.LinearOperator((n, n), matvec=matvec, dtype=float)
    ncv = min(n, 40)
    v0 = np.ones(n) / np.sqrt(n)
    try:
        mu, V = sla.eigsh(inv, k=1, which="LA", ncv=ncv, tol=0.0,
                          maxiter=maxiter, v0=v0)
        converged = True
    except sla.ArpackNoConvergence as exc:
        if len(exc.eigenvalues) == 0:
            raise EigenError("shift-invert Lanczos did not converge") from exc
        mu, V = exc.eigenvalues, exc.eigenvectors
        converged = False
    lam = sigma + 1.0 / mu[0]
    res = _finish(A, lam, V[:, 0], "shift-invert", counter["n"], tol, converged)
    res.info["shift"] = sigma
    return res


def min_eig(A, tol: float = DEFAULT_TOL, method: str = "auto",
            maxiter: int = 5000) -> EigenResult:
    """Algebraically smallest eigenpair of a symmetric matrix.

    ``method='auto'`` uses a dense solver up to ``DENSE_MAX`` unknowns and
    shift-invert Lanczos beyond, with the shift placed one unit below the
    Gershgorin lower bound so that lambda_min maps to the dominant
    eigenvalue of the inverse.
    """
    n = A.shape[0]
    if n < 1:
        raise ValueError("empty matrix")
    if method == "auto":
        method = "dense" if n <= DENSE_MAX else "shift-invert"
    if method == "dense":
        res = _dense(A, tol)
    elif method == "shift-invert":
        if n < 3:
            res = _dense(A, tol)
        else:
            res = _shift_invert(A, tol, maxiter)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not res.converged:
        raise EigenError(f"{res.method} eigensolver did not reach residual "
                         f"{tol:g}*max(1,||A||): got {res.residual:.3e}", res)
    return res


def sign_of(A, lam: float) -> str:
    """'positive', 'negative' or 'indeterminate' relative to the guard band,
    cross-checked against the factorization certificate."""
    g = guard(A)
    pd = is_positive_definite(A)
    if lam > g and pd:
        return "positive"
    if lam < -g and not pd:
        return "negative"
    return "indeterminate"
