"""Nonsingular parts of the spectral decomposition and SVD, Cholesky, pinv.

Conventions:

* eigenvalues ordered positives descending, then negatives by descending
  magnitude; singular values descending;
* the first entry of each column of ``H1`` whose magnitude exceeds
  ``1e-8`` times the column norm is made nonnegative (this fixes the
  2^r-fold sign ambiguity of the factorization).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .spectra import DEFAULT_POLICY, TolerancePolicy, as_symmetric, threshold

SIGN_PIVOT_TOL = 1e-8


@dataclass(frozen=True)
class SpectralParts:
    H1: np.ndarray  # m x r, orthonormal columns
    d: np.ndarray   # r signed eigenvalues
    m: int

    @property
    def rank(self) -> int:
        return len(self.d)

    def reconstruct(self) -> np.ndarray:
        return (self.H1 * self.d) @ self.H1.T


@dataclass(frozen=True)
class SvdParts:
    H1: np.ndarray     # N x r
    sigma: np.ndarray  # r, descending, > 0
    P1: np.ndarray     # m x r

    @property
    def rank(self) -> int:
        return len(self.sigma)

    def reconstruct(self) -> np.ndarray:
        return (self.H1 * self.sigma) @ self.P1.T


@dataclass(frozen=True)
class CholeskyParts:
    T: np.ndarray  # upper triangular, A = T'T

    def reconstruct(self) -> np.ndarray:
        return self.T.T @ self.T


def column_signs(M: np.ndarray) -> np.ndarray:
    """+1/-1 per column so that its first non-negligible entry is nonnegative."""
    signs = np.ones(M.shape[1])
    for j in range(M.shape[1]):
        col = M[:, j]
        big = np.flatnonzero(np.abs(col) > SIGN_PIVOT_TOL * np.linalg.norm(col))
        if big.size and col[big[0]] < 0:
            signs[j] = -1.0
    return signs


def _canonical_order(d: np.ndarray) -> np.ndarray:
    pos = np.flatnonzero(d > 0)
    neg = np.flatnonzero(d < 0)
    pos = pos[np.argsort(-d[pos], kind="stable")]
    neg = neg[np.argsort(d[neg], kind="stable")]
    return np.concatenate([pos, neg]).astype(int)


def spectral_nonsingular(A, policy: TolerancePolicy = DEFAULT_POLICY) -> SpectralParts:
    A = as_symmetric(A)
    m = A.shape[0]
    ev, vecs = np.linalg.eigh(A)
    keep = np.flatnonzero(threshold(ev, policy.rank_tol))
    ev, vecs = ev[keep], vecs[:, keep]
    order = _canonical_order(ev)
    d, H1 = ev[order], vecs[:, order]
    H1 = H1 * column_signs(H1)
    return SpectralParts(H1, d, m)


def svd_nonsingular(X, policy: TolerancePolicy = DEFAULT_POLICY) -> SvdParts:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputError(f"expected a 2-D matrix, got shape {X.shape}")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    r = int(threshold(s, policy.rank_tol).sum())
    H1, s, P1 = U[:, :r], s[:r], Vt[:r].T
    signs = column_signs(H1)
    return SvdParts(H1 * signs, s, P1 * signs)


def leading_minors(A) -> np.ndarray:
    """det of the k x k leading blocks, k = 1..m (the positivity cone test)."""
    A = np.asarray(A, dtype=float)
    return np.array([np.linalg.det(A[:k, :k]) for k in range(1, A.shape[0] + 1)])


def cholesky(A, policy: TolerancePolicy = DEFAULT_POLICY) -> CholeskyParts:
    """Upper-triangular ``T`` with positive diagonal and ``A = T'T``.

    Raises DomainError naming the first leading minor that is not positive.
    """
    A = as_symmetric(A)
    ev = np.linalg.eigvalsh(A)
    top = np.max(np.abs(ev))
    if top > 0 and ev[0] > policy.rank_tol * top:
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            pass
        else:
            return CholeskyParts(np.triu(L.T))
    minors = leading_minors(A)
    scale = max(top, 1e-300)
    for k, det in enumerate(minors, start=1):
        if det <= policy.rank_tol * scale ** k:
            raise DomainError(
                f"not positive definite: leading minor {k} has det {det:.6g} <= 0"
            )
    raise DomainError(f"not positive definite: smallest eigenvalue {ev[0]:.6g}")


def moore_penrose(X, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """``P1 diag(1/sigma) H1'`` from the nonsingular SVD part."""
    parts = svd_nonsingular(X, policy)
    return (parts.P1 / parts.sigma) @ parts.H1.T


def moore_penrose_batch(X, policy: TolerancePolicy = DEFAULT_POLICY) -> np.ndarray:
    """:func:`moore_penrose` over a stack of matrices, shape (b, N, m) -> (b, m, N)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 3:
        raise InputError(f"expected a (b, N, m) stack, got shape {X.shape}")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    top = s[:, :1]
    keep = (s > policy.rank_tol * top) & (top > 0)
    inv = np.divide(1.0, s, out=np.zeros_like(s), where=keep)
    return np.einsum("bji,bj,bkj->bik", Vt, inv, U)
