"""Monte Carlo change-of-variables checks of whole measure factorizations.

Unlike the frame oracle these checks see the global constants (the
``2^{-m}`` sign-convention factor and the Stiefel volumes): a factorization
is accepted when an integral computed in entry coordinates matches the same
integral computed in spectral coordinates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import multigammaln

from . import formulas
from .decomp import moore_penrose_batch
from .errors import InputError

BATCH = 200_000


@dataclass(frozen=True)
class McResult:
    lhs_estimate: float
    rhs_estimate: float
    lhs_stderr: float
    rhs_stderr: float
    n_samples: int
    seed: int
    z_score: float

    def to_dict(self) -> dict:
        return asdict(self)


def _result(lhs: np.ndarray, rhs: np.ndarray, n: int, seed: int) -> McResult:
    ls = float(lhs.std(ddof=1) / math.sqrt(lhs.size))
    rs = float(rhs.std(ddof=1) / math.sqrt(rhs.size))
    le, re = float(lhs.mean()), float(rhs.mean())
    denom = math.hypot(ls, rs)
    z = abs(le - re) / denom if denom > 0 else (0.0 if le == re else math.inf)
    return McResult(le, re, ls, rs, n, seed, z)


def stiefel_volume(k: int, n: int) -> float:
    """Total mass of ``(H1' dH1)`` on V_{k,n}: ``2^k pi^{kn/2} / Gamma_k(n/2)``."""
    if not (isinstance(k, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise InputError("stiefel_volume needs integer dimensions")
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    log_vol = k * math.log(2) + k * n / 2 * math.log(math.pi) - multigammaln(n / 2, k)
    return math.exp(log_vol)


def haar_stiefel(rng: np.random.Generator, n: int, k: int, size: int) -> np.ndarray:
    """``size`` Haar-distributed n x k matrices with orthonormal columns.

    QR of a Gaussian matrix, with R's diagonal forced positive.
    """
    G = rng.standard_normal((size, n, k))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diagonal(R, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return Q * signs[:, None, :]


def _streams(seed: int):
    lhs_ss, rhs_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(lhs_ss), np.random.default_rng(rhs_ss)


def sd_density(D: np.ndarray, pow2: int, vandermonde_power: float = 1.0) -> np.ndarray:
    """Vectorized ``2^pow2 prod_{i<j} |D_i - D_j|^p`` over rows of ``D``."""
    m = D.shape[1]
    out = np.ones(D.shape[0])
    for i in range(m):
        for j in range(i + 1, m):
            out *= np.abs(D[:, i] - D[:, j]) ** vandermonde_power
    return np.ldexp(out, pow2)


def _sd_lhs(rng, m: int, n: int) -> np.ndarray:
    # f(A) = exp(-tr A^2) = prod exp(-a_ii^2) prod_{i<j} exp(-2 a_ij^2): sample
    # entries from exactly these Gaussians so the weight f/p is constant.
    iu = np.triu_indices(m, 1)
    const = math.pi ** (m / 2) * (math.pi / 2) ** (len(iu[0]) / 2)
    out = np.empty(n)
    for start in range(0, n, BATCH):
        b = min(BATCH, n - start)
        A = np.zeros((b, m, m))
        A[:, range(m), range(m)] = rng.normal(0.0, math.sqrt(0.5), size=(b, m))
        off = rng.normal(0.0, 0.5, size=(b, len(iu[0])))
        A[:, iu[0], iu[1]] = off
        A[:, iu[1], iu[0]] = off
        # positive definite cone: every leading minor positive
        inside = np.ones(b, dtype=bool)
        for k in range(1, m + 1):
            inside &= np.linalg.det(A[:, :k, :k]) > 0
        out[start:start + b] = const * inside
    return out


def _sd_rhs(rng, m: int, n: int, drop_pow2: bool, vandermonde_power: float) -> np.ndarray:
    pow2 = 0 if drop_pow2 else formulas.jac_sd_posdef_full(range(m, 0, -1)).pow2
    haar_mass = stiefel_volume(m, m)
    out = np.empty(n)
    for start in range(0, n, BATCH):
        b = min(BATCH, n - start)
        # unordered half-normal draws, density prod (2/sqrt(pi)) e^{-D^2};
        # sorting maps the orthant onto the ordered cone m!-to-1
        D = np.abs(rng.normal(0.0, math.sqrt(0.5), size=(b, m)))
        D = -np.sort(-D, axis=1)
        proposal = (2 / math.sqrt(math.pi)) ** m * np.exp(-np.sum(D ** 2, axis=1))
        H = haar_stiefel(rng, m, m, b)
        A = np.einsum("bij,bj,bkj->bik", H, D, H)
        f = np.exp(-np.einsum("bij,bji->b", A, A))
        dens = sd_density(D, pow2, vandermonde_power)
        out[start:start + b] = f * dens * haar_mass / math.factorial(m) / proposal
    return out


def mc_sd_factorization_check(m: int = 2, n_samples: int = 100_000, seed: int = 0, *,
                              drop_pow2: bool = False,
                              vandermonde_power: float = 1.0) -> McResult:
    """Check ``(dA) = 2^{-m} prod(D_i - D_j) (H'dH) ^ (dD)`` on ``exp(-tr A^2) 1[A > 0]``.

    LHS integrates over the entries ``a_ij, i <= j``; RHS over ordered
    eigenvalues and O(m).  ``drop_pow2`` and ``vandermonde_power`` build
    negative controls.
    """
    if m < 1 or m > 4:
        raise InputError("mc_sd_factorization_check supports 1 <= m <= 4")
    if n_samples < 2:
        raise InputError("need at least 2 samples")
    lhs_rng, rhs_rng = _streams(seed)
    lhs = _sd_lhs(lhs_rng, m, n_samples)
    rhs = _sd_rhs(rhs_rng, m, n_samples, drop_pow2, vandermonde_power)
    return _result(lhs, rhs, n_samples, seed)


def svd_density(s: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Vectorized rank-k SVD measure density over rows of ``s`` (descending)."""
    k = s.shape[1]
    pow2 = formulas.jac_svd_measure(range(k, 0, -1), rows, cols).pow2
    out = np.prod(s ** (rows + cols - 2 * k), axis=1)
    for i in range(k):
        for j in range(i + 1, k):
            out *= np.abs(s[:, i] ** 2 - s[:, j] ** 2)
    return np.ldexp(out, pow2)


def pinv_jacobian(s: np.ndarray, rows: int, cols: int, exponent_shift: int = 0) -> np.ndarray:
    """Vectorized ``prod sigma^{-2(N+m-k)}`` (optionally with a shifted exponent)."""
    e = formulas.pinv_general_exponent(rows, cols, s.shape[1]) + exponent_shift
    return np.prod(s ** e, axis=1)


def _svd_side(rng, rows: int, cols: int, k: int, n: int, pinv_exponent_shift: int | None):
    """Weights of  int g(.) d(measure)  on rank-k rows x cols matrices.

    ``pinv_exponent_shift is None``: integrand ``g(Z)`` against ``(dZ)`` with
    singular values drawn as half-normals.  Otherwise: integrand
    ``g(Z^+) J(Z)`` with singular values drawn as reciprocals of
    half-normals, J the pseudo-inverse Jacobian with its exponent shifted by
    the given amount.
    """
    haar = stiefel_volume(k, rows) * stiefel_volume(k, cols) / math.factorial(k)
    out = np.empty(n)
    for start in range(0, n, BATCH):
        b = min(BATCH, n - start)
        u = np.abs(rng.normal(0.0, math.sqrt(0.5), size=(b, k)))
        proposal = (2 / math.sqrt(math.pi)) ** k * np.exp(-np.sum(u ** 2, axis=1))
        H = haar_stiefel(rng, rows, k, b)
        P = haar_stiefel(rng, cols, k, b)
        if pinv_exponent_shift is None:
            s = -np.sort(-u, axis=1)
            jac = 1.0
        else:
            s = 1.0 / np.sort(u, axis=1)
            proposal = proposal * np.prod(u ** 2, axis=1)   # density of s = 1/u
            jac = pinv_jacobian(s, rows, cols, pinv_exponent_shift)
        Z = np.einsum("bij,bj,bkj->bik", H, s, P)
        Y = Z if pinv_exponent_shift is None else moore_penrose_batch(Z)
        g = np.exp(-np.einsum("bij,bij->b", Y, Y))
        out[start:start + b] = g * jac * svd_density(s, rows, cols) * haar / proposal
    return out


def mc_pinv_check(N: int = 3, m: int = 2, k: int = 2, n_samples: int = 100_000, seed: int = 0, *,
                  exponent_shift: int = 0) -> McResult:
    """Check ``int g(X^+) J(X) (dX) = int g(Y) (dY)`` with ``g(Y) = exp(-tr Y'Y)``.

    X runs over rank-k N x m matrices and Y over rank-k m x N matrices, both
    parameterized by singular values and Haar frames.  ``exponent_shift``
    multiplies J by ``prod sigma^shift`` (negative control).
    """
    if not 1 <= k <= min(N, m):
        raise InputError(f"need 1 <= k <= min(N, m), got {(N, m, k)}")
    if n_samples < 2:
        raise InputError("need at least 2 samples")
    lhs_rng, rhs_rng = _streams(seed)
    lhs = _svd_side(lhs_rng, N, m, k, n_samples, exponent_shift)
    rhs = _svd_side(rhs_rng, m, N, k, n_samples, None)
    return _result(lhs, rhs, n_samples, seed)
