"""Exterior algebra over an indexed basis of 1-forms.

Multivectors are sparse maps from strictly increasing index tuples to real
coefficients.  ``wedge_all`` computes the top-degree coefficient of a full
wedge of 1-forms by incremental expansion, and ``det_coefficient`` computes
the same number as a determinant; each checks the other.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, InputError


@dataclass(frozen=True)
class FormBasis:
    labels: tuple[str, ...]
    index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise InputError("basis labels must be unique")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "index", {lab: i for i, lab in enumerate(labels)})

    def __len__(self):
        return len(self.labels)

    def form(self, coeffs: Mapping[str, float] | None = None, **kw: float) -> OneForm:
        """Build a 1-form from label -> coefficient pairs."""
        items = dict(coeffs or {}, **kw)
        return OneForm(self, {self.index[k]: v for k, v in items.items()})


class OneForm:
    """Sparse linear combination of basis 1-forms."""

    __slots__ = ("basis", "coeffs")

    def __init__(self, basis: FormBasis, coeffs: Mapping[int, float]):
        n = len(basis)
        clean = {}
        for pos, c in coeffs.items():
            if not 0 <= pos < n:
                raise InputError(f"position {pos} outside basis of size {n}")
            if c != 0:
                clean[int(pos)] = float(c)
        self.basis = basis
        self.coeffs = clean

    def __add__(self, other: OneForm) -> OneForm:
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return OneForm(self.basis, out)

    def __rmul__(self, c: float) -> OneForm:
        return OneForm(self.basis, {k: c * v for k, v in self.coeffs.items()})

    __mul__ = __rmul__

    def __repr__(self):
        body = " + ".join(f"{v:g}*{self.basis.labels[k]}" for k, v in sorted(self.coeffs.items()))
        return f"OneForm({body or '0'})"

    def as_multivector(self) -> Multivector:
        return Multivector(1, {(k,): v for k, v in self.coeffs.items()}, len(self.basis))


class Multivector:
    """Homogeneous element of the exterior algebra."""

    __slots__ = ("grade", "terms", "dim")

    def __init__(self, grade: int, terms: Mapping[tuple[int, ...], float], dim: int):
        self.grade = grade
        self.dim = dim
        self.terms = {}
        for key, c in terms.items():
            key = tuple(key)
            if len(key) != grade or any(a >= b for a, b in zip(key, key[1:])):
                raise InputError(f"term {key} is not a strictly increasing {grade}-tuple")
            if c != 0:
                self.terms[key] = float(c)

    @classmethod
    def scalar(cls, c: float, dim: int) -> Multivector:
        return cls(0, {(): c}, dim)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: Multivector) -> Multivector:
        if other.grade != self.grade and not (self.is_zero() or other.is_zero()):
            raise InputError("cannot add multivectors of different grade")
        grade = self.grade if not self.is_zero() else other.grade
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0.0) + v
        return Multivector(grade, out, self.dim)

    def __rmul__(self, c: float) -> Multivector:
        return Multivector(self.grade, {k: c * v for k, v in self.terms.items()}, self.dim)

    def __repr__(self):
        return f"Multivector(grade={self.grade}, terms={self.terms})"

    def allclose(self, other: Multivector, rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(
            abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0))
            <= atol + rtol * max(abs(self.terms.get(k, 0.0)), abs(other.terms.get(k, 0.0)))
            for k in keys
        )


def _as_mv(x) -> Multivector:
    return x.as_multivector() if isinstance(x, OneForm) else x


def _merge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """Sign of the permutation sorting the concatenation ``a + b``."""
    inversions = sum(len(a) - bisect_right(a, y) for y in b)
    return -1 if inversions % 2 else 1


def wedge(a, b) -> Multivector:
    """Exterior product; terms sharing an index vanish."""
    a, b = _as_mv(a), _as_mv(b)
    dim = max(a.dim, b.dim)
    grade = a.grade + b.grade
    if grade > dim:
        return Multivector(grade, {}, dim)
    out: dict[tuple[int, ...], float] = {}
    for ka, ca in a.terms.items():
        sa = set(ka)
        for kb, cb in b.terms.items():
            if sa.intersection(kb):
                continue
            key = tuple(sorted(ka + kb))
            out[key] = out.get(key, 0.0) + _merge_sign(ka, kb) * ca * cb
    return Multivector(grade, out, dim)


def _check_square(forms: Sequence[OneForm], dim: int | None) -> int:
    if dim is None:
        if not forms:
            raise DomainError("cannot infer basis dimension from an empty list")
        dim = len(forms[0].basis)
    if len(forms) != dim:
        raise DomainError(f"need {dim} 1-forms for a top form, got {len(forms)}")
    return dim


def _elimination_order(supports: list[int]) -> list[int]:
    """Greedy order opening as few new basis columns per step as possible.

    Keeps intermediate multivectors small for sparse, block-like systems.
    """
    left = list(range(len(supports)))
    seen = 0
    order = []
    while left:
        best = min(left, key=lambda i: (bin(supports[i] & ~seen).count("1"), i))
        order.append(best)
        left.remove(best)
        seen |= supports[best]
    return order


def _parity(perm: Iterable[int]) -> int:
    perm = list(perm)
    sign = 1
    visited = [False] * len(perm)
    for i in range(len(perm)):
        if visited[i]:
            continue
        j, length = i, 0
        while not visited[j]:
            visited[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def wedge_all(forms: Sequence[OneForm], dim: int | None = None) -> float:
    """Top-form coefficient of ``forms[0] ^ forms[1] ^ ... ^ forms[n-1]``.

    Factors are multiplied in a support-driven order, with the sign of the
    reordering applied at the end.  Index sets are bitmasks here; a partial
    product is dropped as soon as it misses a basis column that no remaining
    factor can supply.
    """
    n = _check_square(forms, dim)
    supports = []
    for f in forms:
        mask = 0
        for k in f.coeffs:
            mask |= 1 << k
        supports.append(mask)
    order = _elimination_order(supports)
    remaining = [0] * n
    for s in supports:
        for k in range(n):
            if s >> k & 1:
                remaining[k] += 1

    full = (1 << n) - 1
    terms: dict[int, float] = {0: 1.0}
    for idx in order:
        for k in forms[idx].coeffs:
            remaining[k] -= 1
        closed = full & ~sum(1 << k for k in range(n) if remaining[k])
        nxt: dict[int, float] = {}
        for S, c in terms.items():
            for k, v in forms[idx].coeffs.items():
                bit = 1 << k
                if S & bit:
                    continue
                T = S | bit
                if T & closed != closed:
                    continue
                # moving e_k left past every larger index already in S
                sgn = -1.0 if bin(S >> (k + 1)).count("1") % 2 else 1.0
                nxt[T] = nxt.get(T, 0.0) + sgn * c * v
        terms = {S: c for S, c in nxt.items() if c != 0}
        if not terms:
            return 0.0
    return _parity(order) * terms.get(full, 0.0)


def coefficient_matrix(forms: Sequence[OneForm], dim: int | None = None) -> np.ndarray:
    n = _check_square(forms, dim)
    C = np.zeros((n, n))
    for i, f in enumerate(forms):
        for k, v in f.coeffs.items():
            C[i, k] = v
    return C


def det_coefficient(forms: Sequence[OneForm], dim: int | None = None) -> float:
    """Same top coefficient as :func:`wedge_all`, via an LU determinant."""
    C = coefficient_matrix(forms, dim)
    if C.shape[0] == 0:
        return 1.0
    return float(np.linalg.det(C))
