"""volform command line: classify, jacobian, verify, integrate.

Exit codes: 0 pass, 1 verification failure, 2 input error, 3 domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import decomp, formulas, integrator, oracle
from .errors import DomainError, InputError
from .spectra import (
    DEFAULT_CLUSTER_TOL, DEFAULT_RANK_TOL, ClusterSpec, TolerancePolicy,
    SYMMETRY_TOL, classify_rect, classify_symmetric,
)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_DOMAIN = 0, 1, 2, 3

SUITES = {
    "SDfull": [("SD-full", (2,)), ("SD-full", (3,)), ("SD-full", (4,))],
    "Eq2": [("Eq2", (3, 1)), ("Eq2", (4, 2))],
    "T1": [("T1", (1, 2)), ("T1", (2, 1)), ("T1", (2, 2)), ("T1", (3, 2))],
    "T2": [("T2", (3, 2, 1, 1)), ("T2", (4, 3, 2, 1)), ("T2", (5, 3, 1, 2))],
    "T3": [("T3-measure", (3, 2, 2)), ("T3-measure", (4, 3, 2)), ("T3-measure", (4, 2, 1))],
}
COMPOSITION_CASES = {
    "general": [(1, 1, 1), (2, 1, 1), (3, 2, 2), (4, 3, 2)],
    "symmetric": [(1, 1), (2, 1), (2, 2), (3, 2)],
    "indefinite": [(2, 1, 1), (3, 2, 1), (4, 2, 1), (3, 1, 2)],
}
DEGENERACY_CASES = [("SD-full", (2,)), ("SD-full", (3,)), ("Eq2", (4, 2)), ("T1", (1, 2)),
                    ("T1", (2, 2)), ("T2", (4, 3, 2, 1)), ("T3-measure", (3, 2, 2))]
SUITE_CHOICES = ("all", *SUITES, "composition", "degeneracy")
COMPOSITION_TOL = 1e-12
Z_PASS = 3.0


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    rank_tol: float = DEFAULT_RANK_TOL
    cluster_tol: float = DEFAULT_CLUSTER_TOL
    trials: int = 100
    seed: int = 0
    rel_tol: float = 1e-9
    output_format: str = "json"
    n_samples: int = 100_000
    transform: str | None = None
    suite: str | None = None
    case: str | None = None

    @property
    def policy(self) -> TolerancePolicy:
        return TolerancePolicy(self.rank_tol, self.cluster_tol)


# ---------------------------------------------------------------- input

def load_matrix(path: str | os.PathLike) -> np.ndarray:
    """Read a CSV (comma-separated rows, no header) or JSON ``{"rows": ...}`` matrix."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            rows = json.loads(text)["rows"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"bad JSON matrix in {path}: {exc}") from exc
    else:
        rows = [line.split(",") for line in text.splitlines() if line.strip()]
    try:
        data = [[float(x) for x in row] for row in rows]
    except (TypeError, ValueError) as exc:
        raise InputError(f"non-numeric entry in {path}: {exc}") from exc
    if not data or any(len(r) != len(data[0]) for r in data) or not data[0]:
        raise InputError(f"{path}: rows must be non-empty and of equal length")
    return np.array(data)


def _is_symmetric(X: np.ndarray) -> bool:
    if X.shape[0] != X.shape[1]:
        return False
    scale = max(float(np.max(np.abs(X))), 1.0)
    return float(np.max(np.abs(X - X.T))) <= SYMMETRY_TOL * scale


# ---------------------------------------------------------------- commands

def cmd_classify(X: np.ndarray, cfg: RunConfig) -> tuple[list[dict], bool]:
    if _is_symmetric(X):
        cls, spec = classify_symmetric(X, cfg.policy)
        kind = "symmetric"
    else:
        cls, spec = classify_rect(X, cfg.policy)
        kind = "rectangular"
    clusters = {
        "positive": asdict(ClusterSpec(spec.positives, spec.positive_multiplicities)),
        "negative": asdict(ClusterSpec(spec.negative_magnitudes, spec.negative_multiplicities)),
    }
    return [{**cls.to_dict(), "kind": kind, "spectrum": spec.to_dict(), "clusters": clusters}], True


def _expanded(values, mults) -> list[float]:
    return ClusterSpec(tuple(values), tuple(mults)).expanded()


def _sd_on_multiset(cls, spec) -> formulas.JacobianFactor:
    """SD measure evaluated on the eigenvalue multiset; ties make it vanish."""
    lam = _expanded(spec.positives, spec.positive_multiplicities)
    delta = _expanded(spec.negative_magnitudes, spec.negative_multiplicities)
    m = cls.m
    if spec.zero_count == 0:
        if lam and delta:
            return formulas.jac_sd_indef_full(lam, delta)
        return formulas.jac_sd_posdef_full(lam or delta)
    if lam and delta:
        return formulas.jac_sd_indef_singular(lam, delta, m)
    return formulas.jac_sd_semidef(lam or delta, m)


def cmd_jacobian(X: np.ndarray, cfg: RunConfig) -> tuple[list[dict], bool]:
    t = cfg.transform
    if t == "cholesky":
        parts = decomp.cholesky(X, cfg.policy)
        f = formulas.jac_cholesky(parts)
        return [{"transform": t, **f.to_dict(), "T": parts.T.tolist()}], True
    if t == "svd" or (t == "pinv" and not _is_symmetric(X)):
        cls, spec = classify_rect(X, cfg.policy)
    else:
        cls, spec = classify_symmetric(X, cfg.policy)
    out = {"transform": t, **cls.to_dict()}
    if t == "sd":
        out.update(_sd_on_multiset(cls, spec).to_dict())
    elif t == "svd":
        sig = _expanded(spec.positives, spec.positive_multiplicities)
        out.update(formulas.jac_svd_measure(sig, cls.N, cls.m).to_dict())
    elif t == "pinv" and spec.positives and spec.negative_magnitudes:
        res = formulas.jac_pinv_indef(list(spec.positives), list(spec.negative_magnitudes), cls.m)
        out.update(res.paper_value.to_dict())
        out.update(res.to_dict())
    elif t == "pinv":
        out.update(formulas.jacobian_for(cls, spec, "pinv").to_dict())
    else:
        raise InputError(f"unknown transform {t!r}")
    if cls.has_multiplicity and t in ("sd", "svd"):
        # distinct values stand in for the spectrum under multiplicity
        out["multiplicity_convention"] = formulas.jacobian_for(cls, spec, t).to_dict()
    return [out], True


def _suite_names(suite: str) -> list[str]:
    return list(SUITE_CHOICES[1:]) if suite == "all" else [suite]


def cmd_verify(cfg: RunConfig) -> tuple[list[dict], bool]:
    results = []
    for name in _suite_names(cfg.suite):
        if name in SUITES:
            for theorem_id, dims in SUITES[name]:
                r = oracle.verify_theorem(theorem_id, dims, cfg.trials, cfg.seed, cfg.rel_tol)
                results.append({"suite": name, **r.to_dict()})
        elif name == "composition":
            tol = min(cfg.rel_tol, COMPOSITION_TOL)
            for kind in ("general", "symmetric"):
                for dims in COMPOSITION_CASES[kind]:
                    r = oracle.verify_composition(kind, dims, cfg.trials, cfg.seed, tol)
                    results.append({"suite": name, **r.to_dict()})
            for dims in COMPOSITION_CASES["indefinite"]:
                r = oracle.adjudicate_pinv_indef(*dims, cfg.trials, cfg.seed, tol)
                results.append({"suite": name, **r.to_dict()})
        elif name == "degeneracy":
            for theorem_id, dims in DEGENERACY_CASES:
                results.append({"suite": name, **oracle.degeneracy_check(theorem_id, dims, cfg.seed)})
    return results, all(r["pass"] for r in results)


def cmd_integrate(cfg: RunConfig) -> tuple[list[dict], bool]:
    n, seed = cfg.n_samples, cfg.seed
    if cfg.case in ("sd2", "sd3"):
        m = int(cfg.case[-1])
        main = integrator.mc_sd_factorization_check(m, n, seed)
        controls = {
            "drop_pow2": integrator.mc_sd_factorization_check(m, n, seed, drop_pow2=True),
            "vandermonde_power_2": integrator.mc_sd_factorization_check(
                m, n, seed, vandermonde_power=2.0),
        }
        note = ("eigenvalues drawn unordered and sorted; the orthant-to-cone "
                f"map is {math.factorial(m)}-to-1 and is divided out")
    elif cfg.case == "pinv":
        main = integrator.mc_pinv_check(3, 2, 2, n, seed)
        controls = {"exponent_plus_1": integrator.mc_pinv_check(3, 2, 2, n, seed, exponent_shift=1)}
        note = "X in rank-2 3x2 matrices, g(Y) = exp(-tr Y'Y)"
    else:
        raise InputError(f"unknown case {cfg.case!r}")
    ok = main.z_score <= Z_PASS
    return [{
        "case": cfg.case, **main.to_dict(), "pass": ok, "note": note,
        "negative_controls": {k: {**v.to_dict(), "rejected": v.z_score > 10}
                              for k, v in controls.items()},
    }], ok


# ---------------------------------------------------------------- output

def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_clean(report), indent=2, allow_nan=False) + "\n"
    rows = report["results"]
    if fmt == "csv":
        flat = [{k: v for k, v in r.items() if not isinstance(v, (dict, list))} for r in rows]
        fields = sorted({k for r in flat for k in r})
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(flat)
        return buf.getvalue()
    lines = [f"{report['command']}: {'PASS' if report['pass'] else 'FAIL'}"]
    for r in rows:
        key = next((k for k in ("theorem_id", "case", "class", "transform") if r.get(k)), None)
        label = r[key] if key else ""
        scalars = ", ".join(f"{k}={v}" for k, v in r.items()
                            if not isinstance(v, (dict, list)) and k != key)
        head = [str(label), str(list(r["dims"])) if "dims" in r else ""]
        lines.append("  " + " ".join(x for x in head + [scalars] if x))
    return "\n".join(lines) + "\n"


def _seed_default() -> int:
    env = os.environ.get("VOLFORM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"VOLFORM_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    common.add_argument("--cluster-tol", type=float, default=DEFAULT_CLUSTER_TOL)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--seed", type=int, default=None,
                        help="defaults to $VOLFORM_SEED, then 0")
    common.add_argument("--samples", type=float, default=1e5, help="Monte Carlo sample count")
    common.add_argument("--rel-tol", type=float, default=1e-9)
    common.add_argument("--format", choices=("json", "csv", "text"), default="json")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true",
                        help="record runtime_ms (makes reports non-reproducible)")

    p = argparse.ArgumentParser(prog="volform", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("classify", parents=[common], help="classify a matrix")
    c.add_argument("--input", required=True)
    j = sub.add_parser("jacobian", parents=[common], help="evaluate a Jacobian factor")
    j.add_argument("--input", required=True)
    j.add_argument("--transform", choices=("sd", "svd", "cholesky", "pinv"), required=True)
    v = sub.add_parser("verify", parents=[common], help="run oracle verification suites")
    v.add_argument("--suite", choices=SUITE_CHOICES, default="all")
    i = sub.add_parser("integrate", parents=[common], help="run a Monte Carlo factorization check")
    i.add_argument("--case", choices=("sd2", "sd3", "pinv"), required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    started = time.perf_counter()
    try:
        cfg = RunConfig(
            command=args.command,
            input_path=getattr(args, "input", None),
            rank_tol=args.rank_tol,
            cluster_tol=args.cluster_tol,
            trials=args.trials,
            seed=args.seed if args.seed is not None else _seed_default(),
            rel_tol=args.rel_tol,
            output_format=args.format,
            n_samples=int(args.samples),
            transform=getattr(args, "transform", None),
            suite=getattr(args, "suite", None),
            case=getattr(args, "case", None),
        )
        if cfg.trials < 1 or cfg.n_samples < 2:
            raise InputError("--trials must be >= 1 and --samples >= 2")
        if cfg.command in ("classify", "jacobian"):
            X = load_matrix(cfg.input_path)
            results, ok = (cmd_classify if cfg.command == "classify" else cmd_jacobian)(X, cfg)
        elif cfg.command == "verify":
            results, ok = cmd_verify(cfg)
        else:
            results, ok = cmd_integrate(cfg)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN

    runtime = round((time.perf_counter() - started) * 1000) if args.timing else None
    report = {
        "schema": SCHEMA,
        "command": cfg.command,
        "config": asdict(cfg),
        "results": results,
        "pass": ok,
        "runtime_ms": runtime,
    }
    text = render(report, cfg.output_format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
