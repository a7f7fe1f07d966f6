"""Charts, complex polynomial data and harmonic generators built on :mod:`weylkit.expr`."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import Expr

__all__ = [
    "Chart", "ComplexPoly2", "ComplexExpr", "complex_coords", "re_holomorphic",
    "laplacian_parts", "sample_points",
]


@dataclass(frozen=True)
class Chart:
    """Axis-aligned coordinate box ``[lo_i, hi_i]`` with coordinates ``x1..xn``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same length")
        if not 1 <= len(lo) <= 6:
            raise ValueError("chart dimension must be in 1..6")
        if any(not b > a for a, b in zip(lo, hi)):
            raise ValueError("chart box must have positive volume")

    @classmethod
    def cube(cls, dim: int, lo: float = -1.0, hi: float = 1.0) -> "Chart":
        return cls((lo,) * dim, (hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(self.dim))

    def contains(self, p, slack: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= np.array(self.lo) - slack) and np.all(p <= np.array(self.hi) + slack))

    def parse(self, text: str) -> Expr:
        return ex.parse(text, self.dim)

    def product(self, other: "Chart") -> "Chart":
        return Chart(self.lo + other.lo, self.hi + other.hi)


def sample_points(chart: Chart, count: int, seed: int = 0, scramble: bool = True) -> np.ndarray:
    """Seeded low-discrepancy (Halton) points inside ``chart``, shape ``(count, dim)``."""
    from scipy.stats import qmc

    if chart.dim == 1:
        u = qmc.Halton(d=2, scramble=scramble, seed=seed).random(count)[:, :1]
    else:
        u = qmc.Halton(d=chart.dim, scramble=scramble, seed=seed).random(count)
    return qmc.scale(u, chart.lo, chart.hi)


@dataclass(frozen=True)
class ComplexExpr:
    """A complex-valued field ``re + i*im`` with real expression parts."""

    re: Expr
    im: Expr

    def __add__(self, other: "ComplexExpr") -> "ComplexExpr":
        return ComplexExpr(self.re + other.re, self.im + other.im)

    def __mul__(self, other: "ComplexExpr") -> "ComplexExpr":
        a, b, c, d = self.re, self.im, other.re, other.im
        return ComplexExpr(a * c - b * d, a * d + b * c)

    def scale(self, c: complex) -> "ComplexExpr":
        c = complex(c)
        return ComplexExpr(c.real * self.re - c.imag * self.im, c.real * self.im + c.imag * self.re)

    def exp(self) -> "ComplexExpr":
        m = ex.exp(self.re)
        return ComplexExpr(m * ex.cos(self.im), m * ex.sin(self.im))

    def __pow__(self, n: int) -> "ComplexExpr":
        out = ComplexExpr(ex.ONE, ex.ZERO)
        for _ in range(int(n)):
            out = out * self
        return out


def complex_coords(z_sign: int = 1, w_sign: int = 1, offset: int = 0) -> tuple[ComplexExpr, ComplexExpr]:
    """``z = x1 + i*z_sign*x2`` and ``w = x3 + i*w_sign*x4`` (indices shifted by ``offset``)."""
    if z_sign not in (1, -1) or w_sign not in (1, -1):
        raise ValueError("signs must be +1 or -1")
    x = [ex.Var(offset + k) for k in range(4)]
    z = ComplexExpr(x[0], x[1] if z_sign > 0 else -x[1])
    w = ComplexExpr(x[2], x[3] if w_sign > 0 else -x[3])
    return z, w


@dataclass(frozen=True)
class ComplexPoly2:
    """``H(z, w) = sum c_pq z^p w^q``, optionally composed as ``exp(H)``.

    ``terms`` maps ``(p, q)`` to a complex coefficient.
    """

    terms: tuple[tuple[tuple[int, int], complex], ...]
    exponential: bool = False

    def __post_init__(self):
        items = self.terms.items() if isinstance(self.terms, dict) else self.terms
        clean = []
        for (p, q), c in items:
            if int(p) != p or int(q) != q or p < 0 or q < 0:
                raise ValueError("monomial degrees must be non-negative integers")
            clean.append(((int(p), int(q)), complex(c)))
        object.__setattr__(self, "terms", tuple(sorted(clean)))

    @classmethod
    def from_dict(cls, terms: dict, exponential: bool = False) -> "ComplexPoly2":
        return cls(tuple(terms.items()), exponential)

    def __call__(self, z: complex, w: complex) -> complex:
        v = sum(c * z**p * w**q for (p, q), c in self.terms)
        return complex(np.exp(v)) if self.exponential else complex(v)

    def to_complex_expr(self, z_sign: int = 1, w_sign: int = 1, conjugate_w: bool = False,
                        offset: int = 0) -> ComplexExpr:
        z, w = complex_coords(z_sign, -w_sign if conjugate_w else w_sign, offset)
        acc = ComplexExpr(ex.ZERO, ex.ZERO)
        for (p, q), c in self.terms:
            acc = acc + ((z ** p) * (w ** q)).scale(c)
        return acc.exp() if self.exponential else acc


def re_holomorphic(H: ComplexPoly2, conjugate_w: bool = False, chart: Chart | None = None,
                   z_sign: int = 1, w_sign: int = 1) -> Expr:
    """``Re H(z, w)`` (or ``Re H(z, conj w)``) as an expression on a 4-dimensional chart.

    With ``z = x1 + i x2`` and ``w = x3 + i x4`` by default; ``z_sign``/``w_sign``
    flip the sign of the imaginary coordinate.  The result is harmonic in
    ``(x1, x2)`` and in ``(x3, x4)`` separately.
    """
    if chart is not None and chart.dim != 4:
        raise ValueError("re_holomorphic needs a 4-dimensional chart")
    return H.to_complex_expr(z_sign, w_sign, conjugate_w).re


def laplacian_parts(f: Expr) -> tuple[Expr, Expr]:
    """Partial Laplacians ``(d11 f + d22 f, d33 f + d44 f)`` as expressions."""
    d = ex.partial
    return (d(d(f, 0), 0) + d(d(f, 1), 1), d(d(f, 2), 2) + d(d(f, 3), 3))


def expr_matrix(texts: Sequence[Sequence[str]], dim: int | None = None) -> list[list[Expr]]:
    return [[ex.parse(t, dim) if isinstance(t, str) else ex.as_expr(t) for t in row] for row in texts]
