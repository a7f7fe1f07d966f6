"""JSON scenarios: validation, builtin catalogue and check execution.

A scenario names a geometric setup (``kind``) and a list of checks; each check
maps to one library operation evaluated at seeded quasi-random points of the
box and reduced to a maximum defect compared against a tolerance.
"""

from __future__ import annotations

import copy
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import expr as ex
from .einstein_weyl import biharmonic_defect, einstein_weyl_defect, weyl_scalar_curvature
from .fields import Chart, ComplexPoly2, sample_points
from .hermitian import (
    asd_identity_defect, bivector_from_form, curvature_operator, endomorphism_covderiv,
    factor_complex_structures, hermitian_form, holonomy_image_rank, hyperhermitian_j_from_H,
    lck_covderiv_defect, lck_lee_form, nijenhuis_norm, normalized_orientation,
)
from .product import (
    ProductWeylChart, build_product, ricci_decomposition_defect, weightless_volume_form,
)
from .tensor_core import KFormValue, MetricValue, sd_asd_split
from .toda import GridSpec, TodaProblem, harmonic_extension, toda_solve
from .weyl import WeylChart, covderiv_weightless_form, metric_defect, pair_symmetry_defect

__all__ = [
    "ConfigError", "MathError", "CheckResult", "Report", "BUILTINS", "CONVENTIONS",
    "load_scenario", "validate", "run_checks", "run_toda", "CHECKS",
]

KINDS = ("weyl_chart", "conformal_product", "toda_solve", "hyperhermitian")
VALIDATION_SAMPLES = 10_000

CONVENTIONS = {
    "adapted_lee_form": "theta = -1/2 (X1(f2) + X2(f1))",
    "curvature": ("R(X,Y) = [D_X, D_Y] - D_[X,Y]; "
                  "Ric(X,Y) = 1/2 sum_k (g(R(X,e_k)e_k, Y) - g(R(X,e_k)Y, e_k)), skew part (2-n)/2 F"),
    "gauge": "g' = e^(2u) g, theta' = theta - du",
    "laplacian": "Delta f = sum_i d_ii f; scal[g1 + e^(2f) g2] = 2 Delta1 f - 2 e^(-2f) Delta2 f",
    "orientation": "normalized: (Y1, I1 Y1, Y2, I2 Y2) positive, i.e. s1*s2 times dx1^dx2^dx3^dx4",
    "wedge": "shuffle convention, (dx1^dx2)(d1, d2) = 1",
}


class ConfigError(ValueError):
    pass


class MathError(ArithmeticError):
    def __init__(self, check: str, point, message: str):
        self.check = check
        self.point = None if point is None else [float(v) for v in point]
        super().__init__(f"{check}: {message} at {self.point}")


@dataclass
class CheckResult:
    name: str
    points_evaluated: int
    max_defect: float
    tolerance: float
    passed: bool
    worst_point: list | None = None

    def as_dict(self) -> dict:
        return {"name": self.name, "points_evaluated": self.points_evaluated,
                "max_defect": self.max_defect, "tolerance": self.tolerance,
                "pass": self.passed, "worst_point": self.worst_point}


@dataclass
class Report:
    scenario: str
    kind: str
    samples: int
    seed: int
    checks: list[CheckResult]
    extra: dict = field(default_factory=dict)
    timestamp: str | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self, with_timestamp: bool = True) -> dict:
        d = {"scenario": self.scenario, "kind": self.kind, "samples": self.samples, "seed": self.seed,
             "pass": self.passed, "conventions": CONVENTIONS,
             "checks": [c.as_dict() for c in sorted(self.checks, key=lambda c: c.name)]}
        d.update(self.extra)
        if with_timestamp and self.timestamp is not None:
            d["timestamp"] = self.timestamp
        return d

    def to_json(self, with_timestamp: bool = True) -> str:
        return json.dumps(self.as_dict(with_timestamp), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        rows = ["name,points_evaluated,max_defect,tolerance,pass"]
        for c in sorted(self.checks, key=lambda c: c.name):
            rows.append(f"{c.name},{c.points_evaluated},{c.max_defect!r},{c.tolerance!r},{str(c.passed).lower()}")
        return "\n".join(rows) + "\n"


# ---------------------------------------------------------------- builtins

_CUBE4 = [[-1.0, 1.0]] * 4

BUILTINS: dict[str, dict] = {
    "biharmonic-x1x3": {
        "description": "2+2 product [g1 + e^(2 x1 x3) g2]: adapted structure is scalar-flat Einstein-Weyl",
        "kind": "conformal_product", "dims": [2, 2], "box": _CUBE4, "f1": "0", "f2": "2*x1*x3",
        "checks": [{"name": n, "tol": 1e-8} for n in
                   ("adapted_parallel_volumes", "mixed_faraday", "einstein_weyl_defect", "scalar_flat")],
    },
    "flat-product": {
        "description": "flat 2+2 product, every check trivially zero",
        "kind": "conformal_product", "dims": [2, 2], "box": _CUBE4, "f1": "0", "f2": "0",
        "checks": [{"name": n, "tol": 1e-12} for n in
                   ("adapted_parallel_volumes", "mixed_faraday", "einstein_weyl_defect", "scalar_flat",
                    "ricci_decomposition", "pair_symmetry")],
    },
    "hyperhermitian-rezw": {
        "description": "hyper-Hermitian product from H = exp(-z w), f = x1 x3 - x2 x4",
        "kind": "hyperhermitian", "box": _CUBE4, "f": "x1*x3 - x2*x4",
        "H": {"terms": [[1, 1, -1.0, 0.0]], "exponential": True}, "signs": [1, -1],
        "checks": [{"name": "nijenhuis_zero", "tol": 1e-9}, {"name": "asd_faraday", "tol": 1e-10},
                   {"name": "holonomy_rank_2", "tol": 0.5}, {"name": "rd_on_F", "tol": 1e-9}],
    },
    "toda-x1x3": {
        "description": "Toda grid solve with boundary data x1 x3 on a 9^4 grid (exact discrete solution)",
        "kind": "toda_solve", "grid": {"sizes": [9, 9, 9, 9], "box": _CUBE4},
        "boundary": "x1*x3", "reference": "x1*x3", "tol": 1e-10,
        "checks": [{"name": "residual", "tol": 1e-10}, {"name": "solution_error", "tol": 1e-9}],
    },
    "toda-manufactured": {
        "description": "manufactured Toda solve, f* = x1^2 x3 on a 9^4 grid",
        "kind": "toda_solve", "grid": {"sizes": [9, 9, 9, 9], "box": _CUBE4},
        "boundary": "x1^2*x3", "manufactured": True, "reference": "x1^2*x3", "tol": 1e-10,
        "checks": [{"name": "residual", "tol": 1e-10}, {"name": "solution_error", "tol": 1e-9}],
    },
}


# ---------------------------------------------------------------- loading and validation

def load_scenario(arg: str) -> dict:
    """Read a scenario from a JSON file path or a builtin name."""
    path = Path(arg)
    if path.is_file():
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{arg}: invalid JSON ({e})") from e
        if not isinstance(data, dict):
            raise ConfigError("scenario must be a JSON object")
        data.setdefault("name", path.stem)
        return data
    if arg in BUILTINS:
        data = copy.deepcopy(BUILTINS[arg])
        data["name"] = arg
        return data
    raise ConfigError(f"no scenario file or builtin named {arg!r}")


def _req(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"missing field {key!r}")
    return cfg[key]


def _box(raw, dim: int | None = None) -> Chart:
    try:
        lo = [float(a) for a, _ in raw]
        hi = [float(b) for _, b in raw]
    except (TypeError, ValueError) as e:
        raise ConfigError("box must be a list of [lo, hi] pairs") from e
    if dim is not None and len(lo) != dim:
        raise ConfigError(f"box has {len(lo)} axes, expected {dim}")
    try:
        return Chart(tuple(lo), tuple(hi))
    except ValueError as e:
        raise ConfigError(f"bad box: {e}") from e


def _expr(text, dim: int, what: str) -> ex.Expr:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return ex.Const(float(text))
    if not isinstance(text, str):
        raise ConfigError(f"{what} must be an expression string")
    try:
        return ex.parse(text, dim)
    except ex.ParseError as e:
        raise ConfigError(f"{what}: {e}") from e


def _matrix(raw, dim: int, what: str):
    if not isinstance(raw, list) or len(raw) != dim or any(not isinstance(r, list) or len(r) != dim for r in raw):
        raise ConfigError(f"{what} must be a {dim}x{dim} list of expressions")
    return [[_expr(e, dim, f"{what}[{i}][{j}]") for j, e in enumerate(r)] for i, r in enumerate(raw)]


def _check_finite(exprs, chart: Chart, what: str, samples: int = VALIDATION_SAMPLES) -> None:
    lo, hi = np.asarray(chart.lo, float), np.asarray(chart.hi, float)
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    # centre and corners catch singularities sitting on symmetric points that low-discrepancy samples miss
    pts = np.vstack([sample_points(chart, samples, seed=12345), 0.5 * (lo + hi), corners]).T
    for e in exprs:
        if isinstance(e, ex.Const):
            continue
        try:
            with np.errstate(all="ignore"):
                v = np.broadcast_to(ex.evaluate(e, pts), pts.shape[1:])
        except ex.DomainError as err:
            raise ConfigError(f"{what}: {ex.to_text(e)} is singular in the box ({err})") from err
        if not np.all(np.isfinite(v)):
            k = int(np.argmin(np.isfinite(v)))
            raise ConfigError(f"{what}: {ex.to_text(e)} is not finite at {pts[:, k].tolist()}")


def _check_metric(W: WeylChart, what: str, samples: int = 256) -> None:
    # overflow in derivatives of a finite metric is a math error, not a config error
    for p in sample_points(W.chart, samples, 0):
        try:
            W.metric_at(p)
        except (FloatingPointError, ex.DomainError) as e:
            raise MathError(f"{what} metric", p, str(e)) from e


def _checks(cfg: dict, kind: str, tol_override: float | None) -> list[tuple[str, float]]:
    raw = cfg.get("checks")
    if raw is None:
        raw = list(CHECKS[kind])
    if not isinstance(raw, list) or not raw:
        raise ConfigError("checks must be a non-empty list")
    out = []
    for item in raw:
        if isinstance(item, str):
            name, tol = item, None
        elif isinstance(item, dict):
            name, tol = item.get("name"), item.get("tol")
        else:
            raise ConfigError(f"bad check entry {item!r}")
        if name not in CHECKS[kind]:
            raise ConfigError(f"unknown check {name!r} for kind {kind!r} (known: {', '.join(sorted(CHECKS[kind]))})")
        tol = CHECKS[kind][name][1] if tol is None else tol
        if tol_override is not None:
            tol = tol_override
        if not isinstance(tol, (int, float)) or not tol > 0:
            raise ConfigError(f"tolerance of {name} must be positive")
        out.append((name, float(tol)))
    if len({n for n, _ in out}) != len(out):
        raise ConfigError("duplicate check names")
    return out


@dataclass
class Setup:
    name: str
    kind: str
    samples: int
    seed: int
    checks: list
    chart: Chart | None = None
    W: WeylChart | None = None
    P: ProductWeylChart | None = None
    signs: tuple = (1, -1)
    H: ComplexPoly2 | None = None
    toda: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)


def validate(cfg: dict, samples: int | None = None, seed: int | None = None,
             tol: float | None = None) -> Setup:
    """Turn a scenario dict into a ready-to-run setup, raising :class:`ConfigError`."""
    kind = _req(cfg, "kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown kind {kind!r} (expected one of {', '.join(KINDS)})")
    samples = cfg.get("samples", 100) if samples is None else samples
    seed = cfg.get("seed", 0) if seed is None else seed
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 1:
        raise ConfigError("samples must be a positive integer")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    checks = _checks(cfg, kind, tol)
    S = Setup(str(cfg.get("name", kind)), kind, samples, seed, checks)
    try:
        if kind == "weyl_chart":
            chart = _box(_req(cfg, "box"))
            n = chart.dim
            g = _matrix(_req(cfg, "g"), n, "g")
            theta = cfg.get("theta")
            if theta is not None:
                if not isinstance(theta, list) or len(theta) != n:
                    raise ConfigError(f"theta must list {n} expressions")
                theta = [_expr(t, n, f"theta[{i}]") for i, t in enumerate(theta)]
            _check_finite([e for r in g for e in r] + (theta or []), chart, "weyl chart")
            S.chart, S.W = chart, WeylChart(chart, g, theta)
            _check_metric(S.W, "weyl chart")
        elif kind in ("conformal_product", "hyperhermitian"):
            if kind == "hyperhermitian":
                n1, n2 = 2, 2
            else:
                dims = _req(cfg, "dims")
                if not (isinstance(dims, list) and len(dims) == 2 and all(isinstance(d, int) and d >= 1 for d in dims)):
                    raise ConfigError("dims must be [n1, n2] with positive integers")
                n1, n2 = dims
            chart = _box(_req(cfg, "box"), n1 + n2)
            c1 = Chart(chart.lo[:n1], chart.hi[:n1])
            c2 = Chart(chart.lo[n1:], chart.hi[n1:])
            n = n1 + n2
            if kind == "hyperhermitian":
                f = _expr(_req(cfg, "f"), 4, "f")
                f1, f2 = ex.ZERO, ex.mul(ex.Const(2.0), f)
                g1 = g2 = None
            else:
                f1 = _expr(cfg.get("f1", "0"), n, "f1")
                f2 = _expr(cfg.get("f2", "0"), n, "f2")
                g1 = None if cfg.get("g1") is None else _matrix(cfg["g1"], n1, "g1")
                g2 = None if cfg.get("g2") is None else _matrix(cfg["g2"], n2, "g2")
            _check_finite([f1, f2], chart, "product functions")
            if g1 is not None:
                _check_finite([e for r in g1 for e in r], c1, "g1")
            if g2 is not None:
                _check_finite([e for r in g2 for e in r], c2, "g2")
            S.P = build_product(c1, g1, c2, g2, f1, f2)
            S.chart, S.W = S.P.chart, S.P.weyl
            if kind == "hyperhermitian":
                S.signs = tuple(cfg.get("signs", (1, -1)))
                if len(S.signs) != 2 or any(s not in (1, -1) for s in S.signs):
                    raise ConfigError("signs must be two entries from {1, -1}")
                Hraw = _req(cfg, "H")
                try:
                    terms = {(int(p), int(q)): complex(re, im) for p, q, re, im in Hraw["terms"]}
                    S.H = ComplexPoly2.from_dict(terms, exponential=bool(Hraw.get("exponential", False)))
                except (KeyError, TypeError, ValueError) as e:
                    raise ConfigError(f"H must be {{'terms': [[p, q, re, im], ...], 'exponential': bool}} ({e})") from e
                S.cache["J"] = hyperhermitian_j_from_H(S.P, S.H, S.signs, samples=256)
        else:
            grid = _req(cfg, "grid")
            gchart = _box(_req(grid, "box"), 4)
            spec = GridSpec(tuple(_req(grid, "sizes")), gchart.lo, gchart.hi)
            boundary = _expr(_req(cfg, "boundary"), 4, "boundary")
            source = cfg.get("source")
            source = None if source is None else _expr(source, 4, "source")
            ref = cfg.get("reference")
            ref = None if ref is None else _expr(ref, 4, "reference")
            manufactured = bool(cfg.get("manufactured", False))
            if manufactured and source is not None:
                raise ConfigError("a manufactured problem derives its own source")
            if any(name == "solution_error" for name, _ in checks) and ref is None:
                raise ConfigError("check solution_error needs a reference expression")
            _check_finite([e for e in (boundary, source, ref) if e is not None], gchart, "toda data")
            initial = cfg.get("initial", "harmonic")
            if initial not in ("harmonic", "zero"):
                raise ConfigError("initial must be 'harmonic' or 'zero'")
            max_iter = cfg.get("max_iter", 30)
            stol = float(cfg.get("tol", 1e-10))
            if not isinstance(max_iter, int) or max_iter < 1 or not stol > 0:
                raise ConfigError("max_iter must be a positive integer and tol positive")
            S.chart = gchart
            S.toda = {"spec": spec, "boundary": boundary, "source": source, "reference": ref,
                      "manufactured": manufactured, "initial": initial, "max_iter": max_iter,
                      "tol": stol, "output": cfg.get("output")}
    except np.linalg.LinAlgError as e:
        raise ConfigError(f"metric is not positive definite in the box ({e})") from e
    except (ConfigError, MathError):
        raise
    except FloatingPointError as e:
        raise MathError("validation", None, str(e)) from e
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return S


# ---------------------------------------------------------------- pointwise checks

def _adapted_parallel(S: Setup, p) -> float:
    forms = S.cache.setdefault("omegas", (weightless_volume_form(S.P, 1), weightless_volume_form(S.P, 2)))
    return max(float(np.max(np.abs(covderiv_weightless_form(S.W, w, p).entries))) for w in forms)


def _mixed_faraday(S: Setup, p) -> float:
    F = S.W.jet(p).faraday
    n1 = S.P.n1
    return float(max(np.max(np.abs(F[:n1, :n1])), np.max(np.abs(F[n1:, n1:]))))


def _ricci_skew(S: Setup, p) -> float:
    jet = S.W.jet(p)
    ric, F, n = jet.ricci, jet.faraday, S.W.dim
    return float(np.max(np.abs(0.5 * (ric - ric.T) - 0.5 * (2 - n) * F)))


def _structures(S: Setup):
    if "I" not in S.cache:
        S.cache["I"] = factor_complex_structures(S.P, S.signs)
    return S.cache["I"]


def _nijenhuis_zero(S: Setup, p) -> float:
    I = _structures(S)[2]
    J = S.cache["J"]
    K = S.cache.setdefault("K", I.compose(J))
    return max(nijenhuis_norm(I, p), nijenhuis_norm(J, p), nijenhuis_norm(K, p))


def _asd_faraday(S: Setup, p) -> float:
    jet = S.W.jet(p)
    sd, _ = sd_asd_split(MetricValue(jet.g), normalized_orientation(S.signs), KFormValue(jet.faraday, 2, 4))
    return float(np.max(np.abs(sd.entries)))


def _f_norm2(jet) -> float:
    E = MetricValue(jet.g).orthonormal_frame()
    Fo = E.T @ jet.faraday @ E
    return float(np.sum(np.triu(Fo, 1) ** 2))


def _holonomy_rank(S: Setup, p):
    jet = S.W.jet(p)
    if np.sqrt(_f_norm2(jet)) < 1e-8:
        return None
    return float(abs(holonomy_image_rank(S.W, p) - 2))


def _rd_on_F(S: Setup, p):
    jet = S.W.jet(p)
    n2 = _f_norm2(jet)
    if np.sqrt(n2) < 1e-8:
        return None
    RF = curvature_operator(S.W, p, bivector_from_form(jet.g, jet.faraday)).entries
    return float(np.max(np.abs(RF - n2 * np.eye(4))))


def _rd_on_I(S: Setup, p) -> float:
    jet = S.W.jet(p)
    I1, I2, _ = _structures(S)
    return max(float(np.max(np.abs(curvature_operator(S.W, p, bivector_from_form(
        jet.g, hermitian_form(jet.g, Ik.at(p)))).entries))) for Ik in (I1, I2))


def _parallel_triple(S: Setup, p) -> float:
    I = _structures(S)[2]
    J = S.cache["J"]
    K = S.cache.setdefault("K", I.compose(J))
    return max(float(np.max(np.abs(endomorphism_covderiv(S.W, E, p)))) for E in (I, J, K))


def _lck(S: Setup, p) -> float:
    I = _structures(S)[2]
    G = S.cache.setdefault("gauge_chart", WeylChart(S.P.chart, S.P.metric))
    tau = lck_lee_form(G, I, p).entries
    return max(float(np.max(np.abs(tau - S.W.jet(p).theta))), lck_covderiv_defect(G, I, p, tau))


def _biharmonic(S: Setup, p) -> float:
    f = ex.mul(ex.Const(0.5), ex.sub(S.P.f2, S.P.f1))
    return max(biharmonic_defect(f, p))


Pointwise = Callable[[Setup, np.ndarray], "float | None"]

_WEYL: dict[str, tuple[Pointwise, float]] = {
    "metric_compatibility": (lambda S, p: metric_defect(S.W, p), 1e-10),
    "pair_symmetry": (lambda S, p: pair_symmetry_defect(S.W, p), 1e-9),
    "ricci_skew": (_ricci_skew, 1e-9),
    "einstein_weyl_defect": (lambda S, p: einstein_weyl_defect(S.W, p), 1e-9),
    "scalar_flat": (lambda S, p: abs(weyl_scalar_curvature(S.W, p)), 1e-9),
}
_PRODUCT = dict(_WEYL)
_PRODUCT.update({
    "adapted_parallel_volumes": (_adapted_parallel, 1e-10),
    "mixed_faraday": (_mixed_faraday, 1e-12),
    "ricci_decomposition": (lambda S, p: ricci_decomposition_defect(S.P, p), 1e-8),
})
_HYPER = dict(_PRODUCT)
_HYPER.update({
    "biharmonic": (_biharmonic, 1e-9),
    "nijenhuis_zero": (_nijenhuis_zero, 1e-9),
    "asd_faraday": (_asd_faraday, 1e-10),
    "holonomy_rank_2": (_holonomy_rank, 0.5),
    "rd_on_F": (_rd_on_F, 1e-9),
    "rd_on_I": (_rd_on_I, 1e-9),
    "parallel_triple": (_parallel_triple, 1e-9),
    "asd_identity": (lambda S, p: asd_identity_defect(S.W, p), 1e-9),
    "lck_lee_form": (_lck, 1e-9),
})
_TODA = {"residual": (None, 1e-10), "solution_error": (None, 1e-9)}

CHECKS: dict[str, dict[str, tuple]] = {
    "weyl_chart": _WEYL, "conformal_product": _PRODUCT, "hyperhermitian": _HYPER, "toda_solve": _TODA,
}


def run_checks(S: Setup) -> Report:
    """Evaluate every pointwise check at ``S.samples`` seeded points."""
    if S.kind == "toda_solve":
        return run_toda(S)[0]
    pts = sample_points(S.chart, S.samples, S.seed)
    results = []
    for name, tol in sorted(S.checks):
        fn = CHECKS[S.kind][name][0]
        worst, worst_p, count = 0.0, None, 0
        for p in pts:
            try:
                with np.errstate(divide="raise", over="raise", invalid="raise", under="ignore"):
                    d = fn(S, p)
            except (ex.DomainError, np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError,
                    OverflowError, ValueError) as e:
                raise MathError(name, p, str(e)) from e
            if d is None:
                continue
            if not np.isfinite(d):
                raise MathError(name, p, "non-finite defect")
            count += 1
            if worst_p is None or d > worst:
                worst, worst_p = float(d), [float(v) for v in p]
        results.append(CheckResult(name, count, worst, tol, count > 0 and worst <= tol, worst_p))
    return Report(S.name, S.kind, S.samples, S.seed, results)


def run_toda(S: Setup):
    """Solve the configured Toda problem; returns ``(report, solver result)``."""
    t = S.toda
    spec = t["spec"]
    if t["manufactured"]:
        prob = TodaProblem.from_exprs(spec, t["boundary"], manufactured=True)
    else:
        prob = TodaProblem.from_exprs(spec, t["boundary"], t["source"])
    if t["initial"] == "harmonic":
        prob = TodaProblem(prob.boundary, prob.source, harmonic_extension(prob.boundary))
    try:
        res = toda_solve(prob, max_iter=t["max_iter"], tol=t["tol"])
    except (FloatingPointError, RuntimeError) as e:
        raise MathError("toda_solve", None, str(e)) from e
    results = []
    interior = int(np.prod([n - 2 for n in spec.sizes]))
    for name, tol in sorted(S.checks):
        if name == "residual":
            d = res.residual
            results.append(CheckResult(name, interior, d, tol, d <= tol))
        else:
            d = res.field.max_abs_diff(spec.sample(t["reference"]))
            results.append(CheckResult(name, int(np.prod(spec.sizes)), d, tol, d <= tol))
    extra = {"solver": {"status": res.status, "converged": res.converged, "iterations": res.iterations,
                        "residual_history": res.history, "step_lengths": res.steps,
                        "linear_iterations": res.linear_iterations,
                        "grid": {"sizes": list(spec.sizes), "lo": list(spec.lo), "hi": list(spec.hi)}}}
    return Report(S.name, S.kind, S.samples, S.seed, results, extra), res
