"""Differential-frame oracle for the Jacobian formulas.

At a point ``A = H1 D H1'`` the rotated differential ``H' dA H`` has
independent entries that are linear in a canonical set of basis 1-forms
(skew entries of ``H1' dH1``, the complement block ``H2' dH1`` and the
``dD_i``).  Wedging those entries gives the local density of Lebesgue or
Hausdorff measure in spectral coordinates, which is compared against the
closed forms in :mod:`volform.formulas`.

The ``2^{-r}`` constants are not visible to this local computation: they
come from fixing column signs of ``H1``, a global double-cover count.  The
comparison uses the product part of each factor only; the Monte Carlo
checks in :mod:`volform.integrator` cover the constants.

A second, independent route checks the pseudo-inverse Jacobians: the
measure of ``X`` is written in spectral coordinates, every singular value
(or eigenvalue) is replaced by its reciprocal, and the ratio of the two
densities times ``prod |d(1/s)/ds|`` must equal the closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import formulas
from .errors import DomainError, InputError, OracleError
from .exterior import FormBasis, OneForm, det_coefficient, wedge_all

THEOREMS = ("SD-full", "Eq2", "T1", "T2", "T3-measure")
AGREEMENT_TOL = 1e-10
TIE_GAP = 1e-3
LOG_RANGE = (math.log(0.1), math.log(10.0))
POW2_NOTE = ("2^{+-r} normalizations are excluded: they count column-sign "
             "choices (a double cover), not a local density")


@dataclass(frozen=True)
class FrameSpec:
    kind: str                 # "SD-full" | "SD-rank-q" | "SVD"
    dims: tuple[int, ...]     # (m,) or (N, m)
    spectrum: tuple[float, ...]


@dataclass
class DifferentialFrame:
    basis: FormBasis
    entry_forms: list[OneForm]
    entry_positions: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.entry_forms) != len(self.basis):
            raise OracleError(
                f"frame is not square: {len(self.entry_forms)} entries "
                f"for a {len(self.basis)}-dimensional basis"
            )


@dataclass
class VerificationReport:
    theorem_id: str
    dims: tuple[int, ...]
    trials: int
    seed: int
    tolerance: float
    per_trial: list[dict] = field(default_factory=list)
    max_rel_err: float = 0.0
    discrepancies: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    pass_: bool = False

    def finalize(self, explained: bool = True) -> VerificationReport:
        errs = [t["rel_err"] for t in self.per_trial if "rel_err" in t]
        self.max_rel_err = max(errs, default=0.0)
        self.pass_ = (not self.errors and explained
                      and all(e <= self.tolerance for e in errs))
        return self

    def to_dict(self, include_trials: bool = True) -> dict:
        out = {
            "theorem_id": self.theorem_id,
            "dims": list(self.dims),
            "trials": self.trials,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "max_rel_err": self.max_rel_err,
            "pass": self.pass_,
            "discrepancies": self.discrepancies,
            "errors": self.errors,
            "notes": self.notes,
        }
        if include_trials:
            out["per_trial"] = self.per_trial
        return out


# ---------------------------------------------------------------- frames

def sd_frame(m: int, d: Sequence[float]) -> DifferentialFrame:
    """Frame of ``H' dA H`` at ``A = H1 diag(d) H1'`` with ``q = len(d)``.

    Entries: ``dd(i)`` on the diagonal, ``(d_j - d_i) s(j,i)`` below it
    inside the q x q block, ``d_j k(i,j)`` in the (m-q) x q complement.
    """
    d = [float(x) for x in d]
    q = len(d)
    if q > m:
        raise DomainError(f"q={q} exceeds m={m}")
    if any(x == 0 for x in d):
        raise DomainError("frame values must be nonzero")
    labels = [f"s({i},{j})" for i in range(1, q + 1) for j in range(i + 1, q + 1)]
    labels += [f"k({i},{j})" for i in range(q + 1, m + 1) for j in range(1, q + 1)]
    labels += [f"dd({i})" for i in range(1, q + 1)]
    basis = FormBasis(tuple(labels))
    forms, positions = [], []
    for i in range(1, q + 1):
        for j in range(1, i + 1):
            if i == j:
                forms.append(basis.form({f"dd({i})": 1.0}))
            else:
                forms.append(basis.form({f"s({j},{i})": d[j - 1] - d[i - 1]}))
            positions.append((i, j))
    for i in range(q + 1, m + 1):
        for j in range(1, q + 1):
            forms.append(basis.form({f"k({i},{j})": d[j - 1]}))
            positions.append((i, j))
    frame = DifferentialFrame(basis, forms, positions)
    expected = q * (q + 1) // 2 + (m - q) * q
    assert len(basis) == expected, (len(basis), expected)
    return frame


def svd_frame(N: int, m: int, sigma: Sequence[float]) -> DifferentialFrame:
    """Frame of ``H' dX P`` at ``X = H1 diag(sigma) P1'`` with ``k = len(sigma)``.

    Blocks: ``V S + dS - S W`` (k x k), ``K_H S`` ((N-k) x k) and
    ``S K_P'`` (k x (m-k)), where V and W are the skew parts of
    ``H1' dH1`` and ``P1' dP1``.
    """
    s = [float(x) for x in sigma]
    k = len(s)
    if k > min(N, m):
        raise DomainError(f"k={k} exceeds min(N, m)={min(N, m)}")
    pairs = [(i, j) for i in range(1, k + 1) for j in range(i + 1, k + 1)]
    labels = [f"v({i},{j})" for i, j in pairs] + [f"w({i},{j})" for i, j in pairs]
    labels += [f"kH({i},{j})" for i in range(k + 1, N + 1) for j in range(1, k + 1)]
    labels += [f"kP({i},{j})" for i in range(k + 1, m + 1) for j in range(1, k + 1)]
    labels += [f"dsigma({i})" for i in range(1, k + 1)]
    basis = FormBasis(tuple(labels))

    def skew(name, i, j):
        # (i, j) entry of a skew matrix whose strict lower part is name(col,row)
        return (f"{name}({j},{i})", 1.0) if i > j else (f"{name}({i},{j})", -1.0)

    forms, positions = [], []
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            if i == j:
                forms.append(basis.form({f"dsigma({i})": 1.0}))
            else:
                vl, vs = skew("v", i, j)
                wl, ws = skew("w", i, j)
                forms.append(basis.form({vl: vs * s[j - 1], wl: -ws * s[i - 1]}))
            positions.append((i, j))
    for i in range(k + 1, N + 1):
        for j in range(1, k + 1):
            forms.append(basis.form({f"kH({i},{j})": s[j - 1]}))
            positions.append((i, j))
    for i in range(1, k + 1):
        for j in range(k + 1, m + 1):
            forms.append(basis.form({f"kP({j},{i})": s[i - 1]}))
            positions.append((i, j))
    frame = DifferentialFrame(basis, forms, positions)
    expected = N * k + m * k - k * k
    assert len(basis) == expected, (len(basis), expected)
    return frame


def oracle_density(frame: DifferentialFrame) -> float:
    """|top coefficient| of the wedge of the frame entries, computed two ways."""
    w = wedge_all(frame.entry_forms, len(frame.basis))
    dt = det_coefficient(frame.entry_forms, len(frame.basis))
    C_norms = [math.sqrt(sum(v * v for v in f.coeffs.values())) for f in frame.entry_forms]
    hadamard = math.prod(C_norms)
    if abs(w - dt) > AGREEMENT_TOL * max(abs(w), abs(dt)) + 1e-13 * hadamard:
        raise OracleError(f"wedge expansion {w!r} disagrees with determinant {dt!r}")
    return abs(w)


# ---------------------------------------------------------------- sampling

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, trial) so results do not depend on scheduling."""
    return np.random.default_rng([int(seed), int(trial)])


def _separated(v: np.ndarray) -> bool:
    v = np.sort(v)
    if v.size < 2:
        return True
    return bool(np.all(np.diff(v) >= TIE_GAP * v[1:]))


def sample_magnitudes(rng: np.random.Generator, count: int) -> list[float]:
    """Log-uniform magnitudes in [0.1, 10], descending, no relative gap below 1e-3."""
    while True:
        v = np.exp(rng.uniform(*LOG_RANGE, size=count))
        if _separated(v):
            return sorted(v.tolist(), reverse=True)


def _parse_dims(theorem_id: str, dims: Sequence[int]) -> dict:
    dims = tuple(int(x) for x in dims)
    try:
        if theorem_id == "SD-full":
            (m,) = dims
            return {"m": m, "lam": m, "delta": 0, "q": m}
        if theorem_id == "Eq2":
            m, q = dims
            return {"m": m, "lam": q, "delta": 0, "q": q}
        if theorem_id == "T1":
            m1, m2 = dims
            return {"m": m1 + m2, "lam": m1, "delta": m2, "q": m1 + m2}
        if theorem_id == "T2":
            if len(dims) == 4:
                m, q, q1, q2 = dims
                if q1 + q2 != q:
                    raise InputError(f"T2 dims {dims}: q1 + q2 != q")
            else:
                m, q1, q2 = dims
            return {"m": m, "lam": q1, "delta": q2, "q": q1 + q2}
        if theorem_id == "T3-measure":
            N, m, k = dims
            return {"N": N, "m": m, "k": k}
    except ValueError as exc:
        raise InputError(f"bad dims {dims} for {theorem_id}") from exc
    raise InputError(f"unknown theorem {theorem_id!r}; expected one of {THEOREMS}")


def theorem_case(theorem_id: str, dims: Sequence[int], lam: Sequence[float],
                 delta: Sequence[float] = ()) -> tuple[DifferentialFrame, formulas.JacobianFactor]:
    """Frame and closed-form factor for one spectrum.

    For T3-measure ``lam`` holds the singular values.
    """
    p = _parse_dims(theorem_id, dims)
    lam, delta = list(lam), list(delta)
    if theorem_id == "T3-measure":
        return svd_frame(p["N"], p["m"], lam), formulas.jac_svd_measure(lam, p["N"], p["m"])
    frame = sd_frame(p["m"], lam + [-x for x in delta])
    if theorem_id == "SD-full":
        f = formulas.jac_sd_posdef_full(lam)
    elif theorem_id == "Eq2":
        f = formulas.jac_sd_semidef(lam, p["m"])
    elif theorem_id == "T1":
        f = formulas.jac_sd_indef_full(lam, delta)
    else:
        f = formulas.jac_sd_indef_singular(lam, delta, p["m"])
    return frame, f


def _sample_case(theorem_id: str, p: dict, rng) -> tuple[list[float], list[float]]:
    if theorem_id == "T3-measure":
        return sample_magnitudes(rng, p["k"]), []
    return sample_magnitudes(rng, p["lam"]), sample_magnitudes(rng, p["delta"])


def verify_theorem(theorem_id: str, dims: Sequence[int], trials: int = 100, seed: int = 0,
                   rel_tol: float = 1e-9) -> VerificationReport:
    """Compare frame-oracle densities with the closed-form product part."""
    if trials < 1:
        raise InputError("trials must be >= 1")
    p = _parse_dims(theorem_id, dims)
    report = VerificationReport(theorem_id, tuple(int(x) for x in dims), trials, seed, rel_tol,
                                notes=[POW2_NOTE])
    for t in range(trials):
        rng = trial_rng(seed, t)
        lam, delta = _sample_case(theorem_id, p, rng)
        try:
            frame, f = theorem_case(theorem_id, dims, lam, delta)
            oracle = oracle_density(frame)
        except OracleError as exc:
            report.errors.append(f"trial {t}: {exc}")
            continue
        target = f.product()
        report.per_trial.append({
            "spectrum": lam + [-x for x in delta],
            "oracle_value": oracle,
            "formula_value": target,
            "rel_err": abs(oracle - target) / abs(target),
        })
    return report.finalize()


def degeneracy_check(theorem_id: str, dims: Sequence[int], seed: int = 0,
                     tie_index: int = 0) -> dict:
    """Inject an exact tie into a random spectrum and measure both routes.

    The tie copies value ``tie_index + 1`` onto ``tie_index`` within the
    positive list (or the negative list when the positive list has fewer
    than two entries).
    """
    p = _parse_dims(theorem_id, dims)
    rng = trial_rng(seed, 0)
    lam, delta = _sample_case(theorem_id, p, rng)
    frame, f = theorem_case(theorem_id, dims, lam, delta)
    untied = oracle_density(frame)
    target = lam if len(lam) >= 2 else delta
    if len(target) < 2:
        raise InputError(f"{theorem_id} {tuple(dims)} has no pair of same-sign values to tie")
    i = min(tie_index, len(target) - 2)
    target[i] = target[i + 1]
    frame, f_tied = theorem_case(theorem_id, dims, lam, delta)
    tied = oracle_density(frame)
    return {
        "theorem_id": theorem_id,
        "dims": list(dims),
        "untied_density": untied,
        "tied_density": tied,
        "ratio": tied / untied,
        "formula_value": f_tied.value(),
        "formula_degenerate": f_tied.degenerate,
        "untied_formula_degenerate": f.degenerate,
        "pass": tied <= 1e-12 * untied and f_tied.value() == 0.0 and f_tied.degenerate,
    }


# ---------------------------------------------------------------- composition

def _check_distinct(values: Sequence[float]):
    v = [abs(x) for x in values]
    if any(x == 0 for x in v):
        raise DomainError("spectrum contains a zero")
    if len(set(values)) != len(values):
        raise DomainError("spectrum contains a tie")


def _rank_q_measure(lam: np.ndarray, delta: np.ndarray, m: int) -> float:
    """Direct-product density of the rank-q symmetric measure (no 2^{-q})."""
    q = lam.size + delta.size
    d = np.concatenate([lam, -delta])
    out = np.prod(np.abs(d) ** (m - q))
    for i in range(q):
        for j in range(i + 1, q):
            out *= abs(d[i] - d[j])
    return float(out)


def composition_pinv_ratio(kind: str, dims: Sequence[int], spectrum: Sequence[float]) -> float:
    """Density ratio (dY)/(dX) obtained by substituting reciprocal spectra.

    kind="general":    dims=(N, m), spectrum = k singular values
    kind="symmetric":  dims=(m,),   spectrum = beta eigenvalues of one sign
    kind="indefinite": dims=(m,),   spectrum = signed eigenvalues
    """
    spec = np.asarray(spectrum, dtype=float)
    _check_distinct(spec.tolist())
    if kind == "general":
        N, m = dims
        k = spec.size
        if np.any(spec <= 0):
            raise DomainError("singular values must be positive")
        mu = 1.0 / spec
        e = N + m - 2 * k
        ratio = np.prod(mu ** e) / np.prod(spec ** e)
        for i in range(k):
            for j in range(i + 1, k):
                ratio *= abs(mu[i] ** 2 - mu[j] ** 2) / abs(spec[i] ** 2 - spec[j] ** 2)
        return float(ratio * np.prod(np.abs(-1.0 / spec ** 2)))
    if kind in ("symmetric", "indefinite"):
        (m,) = dims
        if kind == "symmetric" and np.any(spec > 0) and np.any(spec < 0):
            raise DomainError("symmetric kind expects eigenvalues of a single sign")
        lam, delta = spec[spec > 0], -spec[spec < 0]
        before = _rank_q_measure(lam, delta, m)
        after = _rank_q_measure(np.sort(1.0 / lam)[::-1], np.sort(1.0 / delta)[::-1], m)
        return float(after / before * np.prod(1.0 / spec ** 2))
    raise InputError(f"unknown composition kind {kind!r}")


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def verify_composition(kind: str, dims: Sequence[int], trials: int = 100, seed: int = 0,
                       rel_tol: float = 1e-12) -> VerificationReport:
    """Closed-form pseudo-inverse Jacobians against :func:`composition_pinv_ratio`.

    kind="general": dims=(N, m, k); kind="symmetric": dims=(m, beta).  At
    beta == m the symmetric case is also checked against |det V|^{-(m+1)}
    computed from an explicit matrix.
    """
    dims = tuple(int(x) for x in dims)
    report = VerificationReport(f"pinv-{kind}", dims, trials, seed, rel_tol)
    for t in range(trials):
        rng = trial_rng(seed, t)
        if kind == "general":
            N, m, k = dims
            s = sample_magnitudes(rng, k)
            comp = composition_pinv_ratio("general", (N, m), s)
            formula = formulas.jac_pinv_general(s, N, m).value()
            row = {"spectrum": s, "oracle_value": comp, "formula_value": formula,
                   "rel_err": _rel(formula, comp)}
        elif kind == "symmetric":
            m, beta = dims
            mags = sample_magnitudes(rng, beta)
            sign = 1.0 if rng.random() < 0.5 else -1.0
            signed = [sign * x for x in mags]
            comp = composition_pinv_ratio("symmetric", (m,), signed)
            formula = formulas.jac_pinv_symmetric(mags, m).value()
            row = {"spectrum": signed, "oracle_value": comp, "formula_value": formula,
                   "rel_err": _rel(formula, comp)}
            if beta == m:
                Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
                V = (Q * signed) @ Q.T
                classical = abs(np.linalg.det(V)) ** (-(m + 1))
                row["classical_value"] = float(classical)
                # det of a reconstructed matrix carries ~m*eps rounding
                row["classical_rel_err"] = _rel(formula, classical)
                if row["classical_rel_err"] > max(rel_tol, 1e-10):
                    report.errors.append(f"trial {t}: classical |det V|^-(m+1) mismatch")
        else:
            raise InputError(f"unknown composition kind {kind!r}")
        report.per_trial.append(row)
    return report.finalize()


def adjudicate_pinv_indef(m: int, a1: int, a2: int, trials: int = 100, seed: int = 0,
                          rel_tol: float = 1e-12) -> VerificationReport:
    """Printed vs composition exponents for the indefinite pseudo-inverse.

    Passes when the composition-derived value always matches, and the
    printed value either matches (a2 == 1) or is flagged with a mismatch of
    exactly ``prod lam^{(a2 - 1)}``.
    """
    if a1 < 1 or a2 < 1 or a1 + a2 > m:
        raise InputError(f"need a1, a2 >= 1 and a1 + a2 <= m, got {(m, a1, a2)}")
    report = VerificationReport("pinv-indef", (m, a1, a2), trials, seed, rel_tol)
    flagged = None
    ok = True
    for t in range(trials):
        rng = trial_rng(seed, t)
        lam = sample_magnitudes(rng, a1)
        delta = sample_magnitudes(rng, a2)
        res = formulas.jac_pinv_indef(lam, delta, m)
        comp = composition_pinv_ratio("indefinite", (m,), lam + [-x for x in delta])
        gap = res.lambda_exponent_paper - res.lambda_exponent_oracle
        predicted = comp * math.prod(lam) ** gap
        printed_err = _rel(res.paper_value.value(), predicted)
        report.per_trial.append({
            "spectrum": lam + [-x for x in delta],
            "oracle_value": comp,
            "formula_value": res.oracle_value.value(),
            "paper_value": res.paper_value.value(),
            "rel_err": _rel(res.oracle_value.value(), comp),
            "paper_rel_err_vs_composition": _rel(res.paper_value.value(), comp),
            "paper_rel_err_vs_predicted_gap": printed_err,
        })
        ok &= printed_err <= rel_tol
        flagged = res
    assert flagged is not None
    gap = flagged.lambda_exponent_paper - flagged.lambda_exponent_oracle
    if a2 == 1:
        ok &= not flagged.discrepancy and gap == 0
    else:
        ok &= flagged.discrepancy and gap == a2 - 1
        report.discrepancies.append({
            "kind": "pinv-indef-lambda-exponent",
            "m": m, "alpha1": a1, "alpha2": a2,
            "paper_exponent": flagged.lambda_exponent_paper,
            "composition_exponent": flagged.lambda_exponent_oracle,
            "powers_of_prod_lambda": gap,
            "supported_by_oracle": "composition",
        })
    report.notes.append("delta exponent: printed and composition agree"
                        if flagged.delta_exponent_paper == flagged.delta_exponent_oracle
                        else "delta exponent: printed and composition differ")
    return report.finalize(explained=bool(ok))
