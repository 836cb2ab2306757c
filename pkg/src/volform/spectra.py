"""Matrix taxonomy and clustered spectra.

Symmetric matrices are sorted into definite / semidefinite / indefinite
classes (with or without repeated eigenvalues); rectangular matrices by
rank and repeated singular values.  Exact arithmetic is replaced by two
relative tolerances, see :class:`TolerancePolicy`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

DEFAULT_RANK_TOL = 1e-10
DEFAULT_CLUSTER_TOL = 1e-8
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class TolerancePolicy:
    """Relative thresholds for rank detection and eigenvalue clustering.

    rank_tol:    values with |x| <= rank_tol * max|x| count as zero
    cluster_tol: adjacent sorted values with relative gap <= cluster_tol merge
    """

    rank_tol: float = DEFAULT_RANK_TOL
    cluster_tol: float = DEFAULT_CLUSTER_TOL

    def __post_init__(self):
        if not self.rank_tol > 0:
            raise InputError(f"rank_tol must be positive, got {self.rank_tol}")
        if not self.cluster_tol > 0:
            raise InputError(f"cluster_tol must be positive, got {self.cluster_tol}")


DEFAULT_POLICY = TolerancePolicy()


@dataclass(frozen=True)
class ClusterSpec:
    distinct_values: tuple[float, ...] = ()
    multiplicities: tuple[int, ...] = ()

    def __len__(self):
        return len(self.distinct_values)

    @property
    def total(self) -> int:
        return sum(self.multiplicities)

    def expanded(self) -> list[float]:
        """Representatives repeated by multiplicity (descending)."""
        out: list[float] = []
        for v, k in zip(self.distinct_values, self.multiplicities):
            out.extend([v] * k)
        return out


@dataclass(frozen=True)
class Spectrum:
    """Clustered spectrum split by sign.

    Negative eigenvalues are stored as magnitudes, so every stored value is
    positive and both lists are strictly decreasing.  For rectangular input
    the singular values live in ``positives`` and ``zero_count`` is
    ``min(N, m) - rank``.
    """

    positives: tuple[float, ...] = ()
    negative_magnitudes: tuple[float, ...] = ()
    positive_multiplicities: tuple[int, ...] = ()
    negative_multiplicities: tuple[int, ...] = ()
    zero_count: int = 0

    @property
    def rank(self) -> int:
        return sum(self.positive_multiplicities) + sum(self.negative_multiplicities)

    @property
    def has_multiplicity(self) -> bool:
        return any(k > 1 for k in self.positive_multiplicities + self.negative_multiplicities)

    def signed_values(self, expand: bool = False) -> list[float]:
        """Signed eigenvalues: positives descending, then negatives by descending magnitude."""
        pos = ClusterSpec(self.positives, self.positive_multiplicities)
        neg = ClusterSpec(self.negative_magnitudes, self.negative_multiplicities)
        if expand:
            return pos.expanded() + [-v for v in neg.expanded()]
        return list(pos.distinct_values) + [-v for v in neg.distinct_values]

    def to_dict(self) -> dict:
        return {
            "positives": list(self.positives),
            "negative_magnitudes": list(self.negative_magnitudes),
            "positive_multiplicities": list(self.positive_multiplicities),
            "negative_multiplicities": list(self.negative_multiplicities),
            "zero_count": self.zero_count,
        }


# tag -> ordered parameter names
CLASS_FIELDS: dict[str, tuple[str, ...]] = {
    "PosDef": ("m",),
    "PosDefMult": ("m", "l"),
    "SemiDef": ("m", "q"),
    "SemiDefMult": ("m", "q", "k"),
    "NegDef": ("m",),
    "NegDefMult": ("m", "l"),
    "NegSemiDef": ("m", "q"),
    "NegSemiDefMult": ("m", "q", "k"),
    "Indef": ("m", "m1", "m2"),
    "IndefMult": ("m", "l1", "l2"),
    "SemiIndef": ("m", "q", "q1", "q2"),
    "SemiIndefMult": ("m", "q", "k1", "k2"),
    "Rect": ("N", "m", "q"),
    "RectMult": ("N", "m", "q", "l"),
}

_SIGN_FLIP = {
    "PosDef": "NegDef", "PosDefMult": "NegDefMult",
    "SemiDef": "NegSemiDef", "SemiDefMult": "NegSemiDefMult",
}
_SIGN_FLIP.update({v: k for k, v in _SIGN_FLIP.items()})

SYMMETRIC_TAGS = frozenset(t for t in CLASS_FIELDS if not t.startswith("Rect"))


@dataclass(frozen=True)
class MatrixClass:
    """Tagged union over the matrix taxonomy.

    >>> MatrixClass("Indef", m=3, m1=1, m2=2)
    MatrixClass('Indef', m=3, m1=1, m2=2)
    """

    tag: str
    params: tuple[tuple[str, int], ...] = field(default=())

    def __init__(self, tag: str, **params: int):
        if tag not in CLASS_FIELDS:
            raise InputError(f"unknown matrix class {tag!r}")
        names = CLASS_FIELDS[tag]
        if set(params) != set(names):
            raise InputError(f"{tag} needs fields {names}, got {tuple(params)}")
        object.__setattr__(self, "tag", tag)
        object.__setattr__(self, "params", tuple((k, int(params[k])) for k in names))
        self._check()

    def _check(self):
        p = dict(self.params)
        ok = True
        if "q1" in p:
            ok = p["q1"] + p["q2"] == p["q"] and p["q1"] > 0 and p["q2"] > 0 and p["q"] < p["m"]
        elif "m1" in p:
            ok = p["m1"] + p["m2"] == p["m"] and p["m1"] > 0 and p["m2"] > 0
        elif "k1" in p:
            ok = 0 < p["k1"] + p["k2"] <= p["q"] < p["m"]
        elif "l1" in p:
            ok = 0 < p["l1"] + p["l2"] <= p["m"]
        elif self.tag.startswith("Rect"):
            ok = p["q"] <= min(p["N"], p["m"]) and p.get("l", 0) <= p["q"]
        elif "k" in p:
            ok = p["k"] <= p["q"] < p["m"]
        elif "q" in p:
            ok = p["q"] < p["m"]
        elif "l" in p:
            ok = 1 <= p["l"] <= p["m"]
        if not ok:
            raise InputError(f"inconsistent counts for {self.tag}: {p}")

    def __getitem__(self, name: str) -> int:
        return dict(self.params)[name]

    def __getattr__(self, name: str) -> int:
        if name.startswith("_"):
            raise AttributeError(name)
        try:
            return dict(object.__getattribute__(self, "params"))[name]
        except KeyError:
            raise AttributeError(name) from None

    @property
    def is_symmetric(self) -> bool:
        return self.tag in SYMMETRIC_TAGS

    @property
    def has_multiplicity(self) -> bool:
        return self.tag.endswith("Mult")

    def negated(self) -> MatrixClass:
        """Class of ``-A``: swap signs of the spectrum."""
        p = dict(self.params)
        tag = self.tag
        if p.get("q", None) == 0 and not self.tag.startswith("Rect"):
            return self
        if tag in _SIGN_FLIP:
            return MatrixClass(_SIGN_FLIP[tag], **p)
        if tag == "Indef":
            return MatrixClass(tag, m=p["m"], m1=p["m2"], m2=p["m1"])
        if tag == "IndefMult":
            return MatrixClass(tag, m=p["m"], l1=p["l2"], l2=p["l1"])
        if tag == "SemiIndef":
            return MatrixClass(tag, m=p["m"], q=p["q"], q1=p["q2"], q2=p["q1"])
        if tag == "SemiIndefMult":
            return MatrixClass(tag, m=p["m"], q=p["q"], k1=p["k2"], k2=p["k1"])
        raise InputError(f"{tag} has no negation")

    def to_dict(self) -> dict:
        return {"class": self.tag, **dict(self.params)}

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"MatrixClass({self.tag!r}, {inner})"


def cluster_values(values, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> ClusterSpec:
    """Merge adjacent values whose relative gap is at most ``cluster_tol``.

    Single linkage over the descending sort, so chains merge transitively.
    Each cluster is represented by the mean of its members.
    """
    vals = sorted((float(v) for v in values), reverse=True)
    if not vals:
        return ClusterSpec()
    groups: list[list[float]] = [[vals[0]]]
    for prev, cur in zip(vals, vals[1:]):
        scale = max(abs(prev), abs(cur))
        if prev - cur <= cluster_tol * scale:
            groups[-1].append(cur)
        else:
            groups.append([cur])
    return ClusterSpec(
        tuple(float(np.mean(g)) for g in groups),
        tuple(len(g) for g in groups),
    )


def as_symmetric(A) -> np.ndarray:
    """Validate squareness and symmetry, return the symmetrized float array."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_TOL * max(scale, 1.0):
        raise InputError("matrix is not symmetric")
    return (A + A.T) / 2


def threshold(values: np.ndarray, rank_tol: float) -> np.ndarray:
    """Boolean mask of entries above the relative rank threshold."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.zeros(0, dtype=bool)
    top = np.max(np.abs(values))
    if top == 0:
        return np.zeros(values.shape, dtype=bool)
    return np.abs(values) > rank_tol * top


def _symmetric_tag(m: int, pos: ClusterSpec, neg: ClusterSpec, zeros: int) -> MatrixClass:
    mult = any(k > 1 for k in pos.multiplicities + neg.multiplicities)
    q1, q2 = pos.total, neg.total
    q = q1 + q2
    if zeros == 0:
        if q2 == 0:
            return MatrixClass("PosDefMult", m=m, l=len(pos)) if mult else MatrixClass("PosDef", m=m)
        if q1 == 0:
            return MatrixClass("NegDefMult", m=m, l=len(neg)) if mult else MatrixClass("NegDef", m=m)
        if mult:
            return MatrixClass("IndefMult", m=m, l1=len(pos), l2=len(neg))
        return MatrixClass("Indef", m=m, m1=q1, m2=q2)
    if q2 == 0:
        if mult:
            return MatrixClass("SemiDefMult", m=m, q=q, k=len(pos))
        return MatrixClass("SemiDef", m=m, q=q)
    if q1 == 0:
        if mult:
            return MatrixClass("NegSemiDefMult", m=m, q=q, k=len(neg))
        return MatrixClass("NegSemiDef", m=m, q=q)
    if mult:
        return MatrixClass("SemiIndefMult", m=m, q=q, k1=len(pos), k2=len(neg))
    return MatrixClass("SemiIndef", m=m, q=q, q1=q1, q2=q2)


def classify_symmetric(A, policy: TolerancePolicy = DEFAULT_POLICY) -> tuple[MatrixClass, Spectrum]:
    A = as_symmetric(A)
    m = A.shape[0]
    if m == 0:
        raise InputError("empty matrix")
    ev = np.linalg.eigvalsh(A)
    keep = threshold(ev, policy.rank_tol)
    pos = cluster_values(ev[keep & (ev > 0)], policy.cluster_tol)
    neg = cluster_values(-ev[keep & (ev < 0)], policy.cluster_tol)
    zeros = int(m - keep.sum())
    spec = Spectrum(
        pos.distinct_values, neg.distinct_values,
        pos.multiplicities, neg.multiplicities, zeros,
    )
    return _symmetric_tag(m, pos, neg, zeros), spec


def classify_rect(X, policy: TolerancePolicy = DEFAULT_POLICY) -> tuple[MatrixClass, Spectrum]:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or 0 in X.shape:
        raise InputError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("matrix has non-finite entries")
    N, m = X.shape
    sv = np.linalg.svd(X, compute_uv=False)
    keep = threshold(sv, policy.rank_tol)
    cl = cluster_values(sv[keep], policy.cluster_tol)
    q = cl.total
    spec = Spectrum(cl.distinct_values, (), cl.multiplicities, (), min(N, m) - q)
    if any(k > 1 for k in cl.multiplicities):
        return MatrixClass("RectMult", N=N, m=m, q=q, l=len(cl)), spec
    return MatrixClass("Rect", N=N, m=m, q=q), spec
