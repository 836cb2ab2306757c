"""Closed-form Jacobian factors of matrix factorizations and pseudo-inverses.

Every factor is a signed product of powers of eigenvalues (or singular
values) and their pairwise differences, times a power of two.  Products are
accumulated as sums of logs so spectra spanning 1e-150..1e150 neither
overflow nor underflow; the power of two is kept in its own integer field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .decomp import CholeskyParts
from .errors import DomainError, InputError
from .spectra import MatrixClass, Spectrum


@dataclass(frozen=True)
class JacobianFactor:
    """``sign * 2**pow2 * exp(log_abs)``.

    A zero factor (a repeated eigenvalue killing a difference product) has
    ``log_abs = -inf`` and ``degenerate = True``.
    """

    log_abs: float = 0.0
    sign: int = 1
    pow2: int = 0
    degenerate: bool = False

    def product(self) -> float:
        """The eigenvalue-product part, without the power of two."""
        return self.sign * math.exp(self.log_abs)

    def value(self) -> float:
        return math.ldexp(self.product(), self.pow2)

    def __mul__(self, other: JacobianFactor) -> JacobianFactor:
        return JacobianFactor(
            self.log_abs + other.log_abs,
            self.sign * other.sign,
            self.pow2 + other.pow2,
            self.degenerate or other.degenerate,
        )

    def to_dict(self) -> dict:
        return {
            "log_abs": self.log_abs if math.isfinite(self.log_abs) else None,
            "sign": self.sign,
            "pow2": self.pow2,
            "value": self.value(),
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class PinvIndefResult:
    """Both readings of the indefinite pseudo-inverse Jacobian."""

    paper_value: JacobianFactor
    oracle_value: JacobianFactor
    lambda_exponent_paper: int
    lambda_exponent_oracle: int
    delta_exponent_paper: int
    delta_exponent_oracle: int

    @property
    def discrepancy(self) -> bool:
        return (self.lambda_exponent_paper != self.lambda_exponent_oracle
                or self.delta_exponent_paper != self.delta_exponent_oracle)

    def to_dict(self) -> dict:
        return {
            "paper_value": self.paper_value.to_dict(),
            "oracle_value": self.oracle_value.to_dict(),
            "discrepancy": self.discrepancy,
            "lambda_exponent": {"paper": self.lambda_exponent_paper,
                                "oracle": self.lambda_exponent_oracle},
            "delta_exponent": {"paper": self.delta_exponent_paper,
                               "oracle": self.delta_exponent_oracle},
        }


class _Acc:
    """Accumulates log|product| and its sign term by term."""

    def __init__(self):
        self.terms: list[float] = []
        self.sign = 1
        self.zero = False

    def mul(self, x: float, power: float = 1):
        if power == 0:
            return
        if x == 0:
            if power < 0:
                raise DomainError("zero raised to a negative power")
            self.zero = True
            return
        if x < 0 and power % 2:
            self.sign = -self.sign
        self.terms.append(power * math.log(abs(x)))

    def result(self, pow2: int) -> JacobianFactor:
        if self.zero:
            return JacobianFactor(-math.inf, 1, pow2, True)
        return JacobianFactor(math.fsum(self.terms), self.sign, pow2)


def _positive(values: Sequence[float], what: str) -> list[float]:
    out = [float(v) for v in values]
    for v in out:
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"{what} must be finite and positive, got {v}")
    return out


def _vandermonde(acc: _Acc, v: list[float]):
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            acc.mul(v[i] - v[j])


def _cross(acc: _Acc, lam: list[float], delta: list[float]):
    for a in lam:
        for b in delta:
            acc.mul(a + b)


def _signed_structure(lam: list[float], delta: list[float], m: int, q: int) -> _Acc:
    """prod lam^{m-q} prod delta^{m-q} V(lam) V(delta) prod(lam_i + delta_j)."""
    acc = _Acc()
    for v in lam + delta:
        acc.mul(v, m - q)
    _vandermonde(acc, lam)
    _vandermonde(acc, delta)
    _cross(acc, lam, delta)
    return acc


def jac_sd_posdef_full(d: Sequence[float]) -> JacobianFactor:
    """``2^{-m} prod_{i<j}(D_i - D_j)`` for the full-rank spectral decomposition."""
    d = _positive(d, "eigenvalues")
    m = len(d)
    return _signed_structure(d, [], m, m).result(-m)


def jac_cholesky(T) -> JacobianFactor:
    """``2^m prod_i t_ii^{m+1-i}`` for ``A = T'T``."""
    if isinstance(T, CholeskyParts):
        T = T.T
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InputError(f"expected a square triangular factor, got shape {T.shape}")
    m = T.shape[0]
    diag = _positive(np.diag(T), "Cholesky diagonal")
    acc = _Acc()
    for i, t in enumerate(diag, start=1):
        acc.mul(t, m + 1 - i)
    return acc.result(m)


def jac_sd_semidef(d: Sequence[float], m: int) -> JacobianFactor:
    """Rank-q semidefinite measure ``2^{-q} prod D_i^{m-q} prod_{i<j}(D_i - D_j)``."""
    d = _positive(d, "eigenvalues")
    q = len(d)
    if q > m:
        raise DomainError(f"rank q={q} exceeds dimension m={m}")
    return _signed_structure(d, [], m, q).result(-q)


def jac_sd_indef_full(lam: Sequence[float], delta: Sequence[float]) -> JacobianFactor:
    """Nonsingular indefinite SD with positives ``lam`` and negatives ``-delta``."""
    lam = _positive(lam, "positive eigenvalues")
    delta = _positive(delta, "negative eigenvalue magnitudes")
    m = len(lam) + len(delta)
    return _signed_structure(lam, delta, m, m).result(-m)


def jac_sd_indef_singular(lam: Sequence[float], delta: Sequence[float], m: int) -> JacobianFactor:
    lam = _positive(lam, "positive eigenvalues")
    delta = _positive(delta, "negative eigenvalue magnitudes")
    q = len(lam) + len(delta)
    if q > m:
        raise DomainError(f"rank q={q} exceeds dimension m={m}")
    return _signed_structure(lam, delta, m, q).result(-q)


def jac_svd_measure(sigma: Sequence[float], N: int, m: int) -> JacobianFactor:
    """``2^{-k} prod sigma_i^{N+m-2k} prod_{i<j}(sigma_i^2 - sigma_j^2)``."""
    sigma = _positive(sigma, "singular values")
    k = len(sigma)
    if k > min(N, m):
        raise DomainError(f"k={k} exceeds min(N, m)={min(N, m)}")
    acc = _Acc()
    for s in sigma:
        acc.mul(s, N + m - 2 * k)
    for i in range(k):
        for j in range(i + 1, k):
            # factored so that sigma^2 never overflows
            acc.mul(sigma[i] - sigma[j])
            acc.mul(sigma[i] + sigma[j])
    return acc.result(-k)


def jac_pinv_general(sigma: Sequence[float], N: int, m: int) -> JacobianFactor:
    """Jacobian of ``Y = X^+``: ``prod sigma_i^{-2(N+m-k)}``."""
    sigma = _positive(sigma, "singular values")
    k = len(sigma)
    if k > min(N, m):
        raise DomainError(f"k={k} exceeds min(N, m)={min(N, m)}")
    acc = _Acc()
    for s in sigma:
        acc.mul(s, pinv_general_exponent(N, m, k))
    return acc.result(0)


def pinv_general_exponent(N: int, m: int, k: int) -> int:
    return -2 * (N + m - k)


def pinv_symmetric_exponent(m: int, beta: int) -> int:
    return -(2 * m - beta + 1)


def jac_pinv_symmetric(lam_abs: Sequence[float], m: int) -> JacobianFactor:
    """Jacobian of ``W = V^+`` for (semi)definite symmetric ``V``: ``prod |lam_i|^{-(2m-beta+1)}``."""
    lam_abs = _positive(lam_abs, "eigenvalue magnitudes")
    beta = len(lam_abs)
    if beta > m:
        raise DomainError(f"beta={beta} exceeds m={m}")
    acc = _Acc()
    for v in lam_abs:
        acc.mul(v, pinv_symmetric_exponent(m, beta))
    return acc.result(0)


def jac_pinv_indef(lam: Sequence[float], delta: Sequence[float], m: int) -> PinvIndefResult:
    """Indefinite pseudo-inverse Jacobian, printed exponents vs composition exponents.

    The printed result raises the positive eigenvalues to
    ``-2(m - a1/2 - a2 + 1)`` and the negative magnitudes to
    ``-2(m - (a-1)/2)``.  Composing the rank-a measure with the reciprocal
    map gives ``-(2m - a + 1)`` for both; the two agree on the positive
    part only when a2 == 1.
    """
    lam = _positive(lam, "positive eigenvalues")
    delta = _positive(delta, "negative eigenvalue magnitudes")
    a1, a2 = len(lam), len(delta)
    a = a1 + a2
    if a > m:
        raise DomainError(f"alpha={a} exceeds m={m}")
    oracle_exp = pinv_symmetric_exponent(m, a)
    if a2 == 0 or a1 == 0:
        # (semi)definite, V or -V: the symmetric reading applies to both sides
        f = jac_pinv_symmetric(lam + delta, m)
        return PinvIndefResult(f, f, oracle_exp, oracle_exp, oracle_exp, oracle_exp)
    lam_exp = -2 * m + a1 + 2 * a2 - 2    # -2(m - a1/2 - a2 + 1)
    delta_exp = -2 * m + a - 1            # -2(m - (a-1)/2)
    printed, oracle = _Acc(), _Acc()
    for v in lam:
        printed.mul(v, lam_exp)
    for v in delta:
        printed.mul(v, delta_exp)
    for v in lam + delta:
        oracle.mul(v, oracle_exp)
    return PinvIndefResult(printed.result(0), oracle.result(0),
                           lam_exp, oracle_exp, delta_exp, oracle_exp)


TRANSFORMS = ("sd", "svd", "pinv")


def _magnitudes(spectrum: Spectrum) -> list[float]:
    return sorted(spectrum.positives + spectrum.negative_magnitudes, reverse=True)


def jacobian_for(cls: MatrixClass, spectrum: Spectrum, transform: str) -> JacobianFactor:
    """Dispatch a classified spectrum to its Jacobian formula.

    Under multiplicity the distinct values stand in for the spectrum (the
    effective count is l or k rather than m or q).  For indefinite ``pinv``
    the printed exponents are returned; call :func:`jac_pinv_indef` for both
    readings.
    """
    tag = cls.tag
    lam = list(spectrum.positives)
    delta = list(spectrum.negative_magnitudes)
    if transform == "sd":
        if not cls.is_symmetric:
            raise InputError(f"sd needs a symmetric class, got {tag}")
        m = cls.m
        if tag in ("PosDef", "NegDef"):
            return jac_sd_posdef_full(lam or delta)
        if tag == "Indef":
            return jac_sd_indef_full(lam, delta)
        if tag in ("PosDefMult", "NegDefMult", "SemiDef", "SemiDefMult",
                   "NegSemiDef", "NegSemiDefMult"):
            return jac_sd_semidef(lam or delta, m)
        return jac_sd_indef_singular(lam, delta, m)
    if transform == "svd":
        if cls.is_symmetric:
            raise InputError(f"svd needs a rectangular class, got {tag}")
        return jac_svd_measure(lam, cls.N, cls.m)
    if transform == "pinv":
        if not cls.is_symmetric:
            return jac_pinv_general(lam, cls.N, cls.m)
        if lam and delta:
            return jac_pinv_indef(lam, delta, cls.m).paper_value
        return jac_pinv_symmetric(_magnitudes(spectrum), cls.m)
    raise InputError(f"unsupported transform {transform!r}; expected one of {TRANSFORMS}")
