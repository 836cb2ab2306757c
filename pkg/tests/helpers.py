import numpy as np
from scipy.stats import ortho_group

from volform.exterior import FormBasis, OneForm


def random_orthogonal(rng, m):
    if m == 1:
        return np.array([[1.0 if rng.random() < 0.5 else -1.0]])
    return ortho_group.rvs(m, random_state=rng)


def separated(rng, count, lo=0.5, hi=5.0):
    """Descending values with comfortable gaps (well above every tolerance)."""
    while True:
        v = np.sort(rng.uniform(lo, hi, size=count))[::-1]
        if count < 2 or np.min(-np.diff(v)) > 0.05:
            return v.tolist()


def symmetric_from(rng, m, values):
    H = random_orthogonal(rng, m)
    d = np.zeros(m)
    d[: len(values)] = values
    return (H * d) @ H.T


def rect_from(rng, N, m, sigma):
    U = random_orthogonal(rng, N)[:, : len(sigma)]
    V = random_orthogonal(rng, m)[:, : len(sigma)]
    return (U * np.asarray(sigma)) @ V.T


def _with_repeat(vals):
    return [vals[0]] + vals if vals else vals


_NEGATED = {"NegDef": "PosDef", "NegDefMult": "PosDefMult",
            "NegSemiDef": "SemiDef", "NegSemiDefMult": "SemiDefMult"}


def matrix_for_tag(rng, tag):
    """A random matrix whose class is ``tag`` (well-separated spectrum)."""
    m = int(rng.integers(4, 7))
    pos = lambda c: separated(rng, c)
    neg = lambda c: [-x for x in separated(rng, c)]
    if tag == "PosDef":
        return symmetric_from(rng, m, pos(m))
    if tag == "PosDefMult":
        return symmetric_from(rng, m, _with_repeat(pos(m - 1)))
    if tag == "SemiDef":
        return symmetric_from(rng, m, pos(m - 1))
    if tag == "SemiDefMult":
        return symmetric_from(rng, m, _with_repeat(pos(m - 2)))
    if tag.startswith("Neg"):
        return -matrix_for_tag(rng, _NEGATED[tag])
    if tag == "Indef":
        return symmetric_from(rng, m, pos(1) + neg(m - 1))
    if tag == "IndefMult":
        return symmetric_from(rng, m, _with_repeat(pos(2)) + neg(m - 3))
    if tag == "SemiIndef":
        return symmetric_from(rng, m, pos(1) + neg(m - 2))
    if tag == "SemiIndefMult":
        return symmetric_from(rng, m, pos(1) + _with_repeat(neg(m - 3)))
    N = m + int(rng.integers(0, 3))
    if tag == "Rect":
        return rect_from(rng, N, m, pos(m - 1))
    if tag == "RectMult":
        return rect_from(rng, N, m, _with_repeat(pos(m - 2)))
    raise ValueError(tag)


def random_system(rng, n):
    """n 1-forms over an n-dim basis: dense for n <= 10, sparse block-like above."""
    basis = FormBasis(tuple(f"e{i}" for i in range(n)))
    if n <= 10:
        C = rng.standard_normal((n, n))
    else:
        C = np.zeros((n, n))
        i = 0
        while i < n:
            b = min(int(rng.integers(1, 5)), n - i)
            C[i:i + b, i:i + b] = rng.standard_normal((b, b))
            i += b
        for r in range(n):
            if rng.random() < 0.3:
                C[r, rng.integers(n)] += rng.standard_normal()
        C = C[rng.permutation(n)][:, rng.permutation(n)]
    forms = [OneForm(basis, {j: C[r, j] for j in range(n) if C[r, j] != 0}) for r in range(n)]
    return forms, C


def leibniz_det(C):
    """Permutation-sum determinant; independent of both LU and wedge expansion."""
    from itertools import permutations

    n = len(C)
    total = 0.0
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1.0 if inv % 2 else 1.0
        for r, c in enumerate(perm):
            term *= C[r][c]
        total += term
    return total
