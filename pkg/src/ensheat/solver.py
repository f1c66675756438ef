"""Shared SPD factorization and multi-right-hand-side solves.

The implicit operator of the ensemble schemes is time- and member-
independent, so it is factorized exactly once per run and the factor is
reused for every member at every step.  The factorization is a banded
Cholesky after a reverse Cuthill-McKee reordering (bandwidth reduction is
the appropriate fill-reducing strategy for banded storage); both the
factorization and the triangular solves are LAPACK calls.

A module-level counter records factorizations so the one-factorization
contract is observable in tests and benchmarks.
"""

from __future__ import annotations

import re

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .assembly import SparseSymMatrix

__all__ = [
    "SolverError",
    "FactorizationError",
    "SpdFactor",
    "factorize",
    "solve_block",
    "pcg_solve",
    "factorization_count",
    "reset_factorization_count",
]

_factorizations = 0


def factorization_count() -> int:
    return _factorizations


def reset_factorization_count() -> None:
    global _factorizations
    _factorizations = 0


class SolverError(RuntimeError):
    pass


class FactorizationError(SolverError):
    """Factorization failed; ``pivot`` is the offending pivot index (0-based)."""

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class SpdFactor:
    """Cholesky factorization of a SparseSymMatrix.

    Holds the fill-reducing permutation, the banded upper factor, and a
    fingerprint of the source matrix so stale factors are detectable.
    """

    def __init__(self, matrix: SparseSymMatrix, perm, band_upper, bandwidth):
        self.n = matrix.n
        self.perm = perm
        self.band_upper = band_upper
        self.bandwidth = int(bandwidth)
        self.fingerprint = matrix.fingerprint()
        self._matrix = matrix
        self._iperm = np.empty_like(perm)
        self._iperm[perm] = np.arange(perm.size)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b for one vector or a (n, k) block of right-hand sides."""
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.n:
            raise ValueError(f"right-hand side has dimension {b.shape[0]}, expected {self.n}")
        xp = sla.cho_solve_banded((self.band_upper, False), b[self.perm])
        return xp[self._iperm]

    @property
    def matrix(self) -> SparseSymMatrix:
        return self._matrix


def factorize(A: SparseSymMatrix) -> SpdFactor:
    """Cholesky-factorize an SPD matrix; fails with the pivot index otherwise."""
    global _factorizations
    if not A.symmetric:
        raise FactorizationError("matrix is not flagged symmetric")
    csr = A.to_scipy()
    perm = np.asarray(reverse_cuthill_mckee(csr, symmetric_mode=True), dtype=np.int64)
    permuted = csr[perm][:, perm].tocoo()
    if permuted.nnz == 0:
        raise FactorizationError("empty matrix", pivot=0)
    bw = int(np.max(np.abs(permuted.row - permuted.col)))
    ab = np.zeros((bw + 1, A.n))
    upper = permuted.row <= permuted.col
    r, c, v = permuted.row[upper], permuted.col[upper], permuted.data[upper]
    np.add.at(ab, (bw + r - c, c), v)
    try:
        band = sla.cholesky_banded(ab, lower=False)
    except np.linalg.LinAlgError as exc:
        match = re.search(r"(\d+)", str(exc))
        pivot = None
        if match:
            # LAPACK reports the 1-based pivot in the permuted ordering
            pivot = int(perm[int(match.group(1)) - 1])
        raise FactorizationError(
            f"matrix is not positive definite (pivot at node {pivot})", pivot=pivot
        ) from exc
    _factorizations += 1
    return SpdFactor(A, perm, band, bw)


def solve_block(factor: SpdFactor, rhs) -> list[np.ndarray]:
    """Solve against J right-hand sides reusing one factorization.

    ``rhs`` is a sequence of J vectors or an (n, J) array; the solutions are
    verified against the residual bound ||A x - b|| <= 1e-10 (1 + ||b||).
    """
    if isinstance(rhs, np.ndarray) and rhs.ndim == 2:
        B = np.asarray(rhs, dtype=np.float64)
    else:
        B = np.column_stack([np.asarray(b, dtype=np.float64) for b in rhs])
    if B.shape[0] != factor.n:
        raise ValueError(f"right-hand sides have dimension {B.shape[0]}, expected {factor.n}")
    X = factor.solve(B)
    res = factor.matrix.to_scipy() @ X - B
    norms = np.linalg.norm(res, axis=0)
    bounds = 1e-10 * (1.0 + np.linalg.norm(B, axis=0))
    if np.any(norms > bounds):
        worst = int(np.argmax(norms - bounds))
        raise SolverError(
            f"solve residual {norms[worst]:.3e} exceeds bound {bounds[worst]:.3e}"
        )
    return [X[:, j] for j in range(X.shape[1])]


def pcg_solve(A: SparseSymMatrix, b: np.ndarray, tol: float = 1e-10, max_iter: int | None = None):
    """Jacobi-preconditioned conjugate gradients for an SPD matrix.

    Returns ``(x, iterations)``; stops when the relative residual drops below
    ``tol`` or ``max_iter`` is reached.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != A.n:
        raise ValueError("dimension mismatch")
    if max_iter is None:
        max_iter = 10 * A.n
    diag = A.diagonal()
    if np.any(diag == 0.0):
        raise SolverError("Jacobi preconditioner breakdown: zero diagonal entry")
    norm_b = np.linalg.norm(b)
    x = np.zeros_like(b)
    if norm_b == 0.0:
        return x, 0
    mat = A.to_scipy()
    r = b.copy()
    z = r / diag
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Ap = mat @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * norm_b:
            return x, it
        z = r / diag
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter
