"""Conformal products ``g = e^{f1} g1 + e^{f2} g2`` and their adapted Weyl structure.

Factor 1 occupies coordinates ``x1..x{n1}`` of the product chart and factor 2
the remaining ``n2``.  Factor metrics are written in their own coordinates;
``g2`` is renumbered into the product chart on construction.

The adapted Lee form (the unique Weyl structure preserving both factor
distributions) in the gauge ``g`` is

    theta = -1/2 (d f2 restricted to factor-1 slots + d f1 restricted to factor-2 slots).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import expr as ex
from .expr import Expr
from .fields import Chart, sample_points
from .tensor_core import TensorValue
from .weyl import KFormField, WeylChart, weyl_ricci

__all__ = [
    "ProductWeylChart", "build_product", "weightless_volume_form", "mixed_faraday_check",
    "slice_ricci", "fhat", "ricci_decomposition_rhs", "ricci_decomposition_defect",
    "flat_metric", "det_expr", "toda_product",
]


def flat_metric(n: int) -> list[list[Expr]]:
    return [[ex.ONE if i == j else ex.ZERO for j in range(n)] for i in range(n)]


def det_expr(m) -> Expr:
    """Symbolic determinant by cofactor expansion (sizes up to 3 in practice)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return ex.sub(ex.mul(m[0][0], m[1][1]), ex.mul(m[0][1], m[1][0]))
    acc: Expr = ex.ZERO
    for j in range(n):
        if m[0][j] == ex.ZERO:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = ex.mul(m[0][j], det_expr(minor))
        acc = ex.add(acc, term) if j % 2 == 0 else ex.sub(acc, term)
    return acc


def _sqrt(e: Expr) -> Expr:
    if isinstance(e, ex.Const):
        return ex.Const(float(np.sqrt(e.value)))
    return ex.exp(ex.mul(ex.Const(0.5), ex.ln(e)))


def _parse(e, dim):
    return ex.parse(e, dim) if isinstance(e, str) else ex.as_expr(e)


@dataclass(frozen=True, eq=False)
class ProductWeylChart:
    chart1: Chart
    g1: tuple
    chart2: Chart
    g2: tuple
    f1: Expr
    f2: Expr

    @property
    def n1(self) -> int:
        return self.chart1.dim

    @property
    def n2(self) -> int:
        return self.chart2.dim

    @property
    def dim(self) -> int:
        return self.n1 + self.n2

    @cached_property
    def chart(self) -> Chart:
        return self.chart1.product(self.chart2)

    @cached_property
    def g2_shifted(self) -> tuple:
        return tuple(tuple(ex.shift_vars(e, self.n1) for e in row) for row in self.g2)

    def slots(self, which: int) -> range:
        if which == 1:
            return range(0, self.n1)
        if which == 2:
            return range(self.n1, self.dim)
        raise ValueError("which must be 1 or 2")

    @cached_property
    def metric(self) -> list[list[Expr]]:
        n, n1 = self.dim, self.n1
        e1, e2 = ex.exp(self.f1), ex.exp(self.f2)
        g = [[ex.ZERO] * n for _ in range(n)]
        for i in range(n1):
            for j in range(n1):
                g[i][j] = ex.mul(e1, self.g1[i][j])
        for i in range(self.n2):
            for j in range(self.n2):
                g[n1 + i][n1 + j] = ex.mul(e2, self.g2_shifted[i][j])
        return g

    @cached_property
    def lee_form(self) -> list[Expr]:
        half = ex.Const(-0.5)
        th = [ex.mul(half, ex.partial(self.f2, i)) for i in self.slots(1)]
        th += [ex.mul(half, ex.partial(self.f1, j)) for j in self.slots(2)]
        return th

    @cached_property
    def weyl(self) -> WeylChart:
        return WeylChart(self.chart, self.metric, self.lee_form)

    def is_pure(self, i: int, j: int) -> bool:
        return (i < self.n1) == (j < self.n1)


def build_product(chart1: Chart, g1, chart2: Chart, g2, f1, f2, check_samples: int = 32,
                  seed: int = 0) -> ProductWeylChart:
    """Conformal product of two charts; ``g1``/``g2`` default to flat when ``None``.

    ``f1``, ``f2`` are functions on the product chart (strings or expressions).
    Factor metrics are checked for positive definiteness at sampled points.
    """
    n1, n2 = chart1.dim, chart2.dim
    if n1 + n2 > 6:
        raise ValueError("product dimension must not exceed 6")
    g1 = flat_metric(n1) if g1 is None else g1
    g2 = flat_metric(n2) if g2 is None else g2
    W1, W2 = WeylChart(chart1, g1), WeylChart(chart2, g2)
    W1.check_metric(check_samples, seed)
    W2.check_metric(check_samples, seed)
    n = n1 + n2
    P = ProductWeylChart(chart1, W1.g, chart2, W2.g, _parse(f1, n), _parse(f2, n))
    for e in (P.f1, P.f2):
        if ex.free_vars(e) - set(range(n)):
            raise ValueError(f"{e} uses coordinates outside the product chart")
    return P


def weightless_volume_form(P: ProductWeylChart, which: int) -> KFormField:
    """Unit-length gauge representative of the factor volume form.

    ``omega_i = e^{n_i f_i / 2} sqrt(det g_i) dx^{factor i}`` with the factor's
    standard orientation.
    """
    slots = list(P.slots(which))
    ni = len(slots)
    gi = P.g1 if which == 1 else P.g2_shifted
    f = P.f1 if which == 1 else P.f2
    scale = ex.mul(ex.exp(ex.mul(ex.Const(ni / 2.0), f)), _sqrt(det_expr([list(r) for r in gi])))
    return KFormField.from_components(P.chart, ni, {tuple(slots): scale})


def mixed_faraday_check(P: ProductWeylChart, samples: int = 100, seed: int = 0) -> float:
    """Largest pure-type Faraday entry over seeded sample points."""
    W = P.weyl
    worst = 0.0
    for p in sample_points(P.chart, samples, seed):
        F = W.jet(p).faraday
        for i in range(P.dim):
            for j in range(P.dim):
                if P.is_pure(i, j):
                    worst = max(worst, abs(F[i, j]))
    return worst


def _slice(P: ProductWeylChart, which: int, p) -> WeylChart:
    p = np.asarray(p, dtype=float)
    slots = list(P.slots(which))
    other = [k for k in range(P.dim) if k not in slots]
    eps = 1.0 if which == 1 else -1.0
    conf = ex.exp(ex.mul(ex.Const(eps), ex.sub(P.f1, P.f2)))
    gi = P.g1 if which == 1 else P.g2_shifted
    frozen = {k: float(p[k]) for k in other}
    offset = slots[0]
    rows = []
    for a in slots:
        row = []
        for b in slots:
            e = ex.substitute(ex.mul(conf, gi[a - offset][b - offset]), frozen)
            row.append(ex.shift_vars(e, -offset) if offset else e)
        rows.append(row)
    chart = P.chart1 if which == 1 else P.chart2
    return WeylChart(chart, rows)


def slice_ricci(P: ProductWeylChart, which: int, p) -> TensorValue:
    """Ricci tensor of ``e^{eps(i)(f1-f2)} g_i`` on the slice through ``p``.

    ``eps(1) = 1``, ``eps(2) = -1``; the other factor's coordinates are frozen
    at their values in ``p``.  Returned on the factor's own slots.
    """
    p = np.asarray(p, dtype=float)
    slots = list(P.slots(which))
    S = _slice(P, which, p)
    return weyl_ricci(S, p[slots])


def fhat(P: ProductWeylChart, p) -> TensorValue:
    """Symmetric extension of the mixed Faraday block: ``F^(X1, X2) = F^(X2, X1) = F(X1, X2)``."""
    F = P.weyl.jet(p).faraday
    n1 = P.n1
    H = np.zeros_like(F)
    H[:n1, n1:] = F[:n1, n1:]
    H[n1:, :n1] = -F[n1:, :n1]
    return TensorValue(H, "dd")


def ricci_decomposition_rhs(P: ProductWeylChart, p) -> np.ndarray:
    """``Ric^1 + Ric^2 + (2-n)/2 F + (n1-n2)/2 F^`` assembled at ``p``."""
    p = np.asarray(p, dtype=float)
    n, n1 = P.dim, P.n1
    rhs = np.zeros((n, n))
    rhs[:n1, :n1] = slice_ricci(P, 1, p).entries
    rhs[n1:, n1:] = slice_ricci(P, 2, p).entries
    F = P.weyl.jet(p).faraday
    rhs += 0.5 * (2 - n) * F + 0.5 * (P.n1 - P.n2) * fhat(P, p).entries
    return rhs


def ricci_decomposition_defect(P: ProductWeylChart, p) -> float:
    ric = weyl_ricci(P.weyl, p).entries
    return float(np.max(np.abs(ric - ricci_decomposition_rhs(P, p))))


def toda_product(f, chart: Chart | None = None) -> ProductWeylChart:
    """The 2+2 product ``[g1 + e^{2f} g2]`` with flat factors (``f1 = 0``, ``f2 = 2f``)."""
    chart = chart or Chart.cube(4)
    if chart.dim != 4:
        raise ValueError("the Toda ansatz lives on a 4-dimensional chart")
    f = _parse(f, 4)
    c1 = Chart(chart.lo[:2], chart.hi[:2])
    c2 = Chart(chart.lo[2:], chart.hi[2:])
    return build_product(c1, None, c2, None, ex.ZERO, ex.mul(ex.Const(2.0), f))
