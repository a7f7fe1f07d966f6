"""Einstein-Weyl and scalar-curvature diagnostics, Toda residuals and bi-harmonicity."""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .expr import Expr
from .fields import laplacian_parts
from .weyl import WeylChart

__all__ = [
    "toda_residual", "biharmonic_defect", "einstein_weyl_defect", "weyl_scalar_curvature",
    "symmetric_ricci", "toda_expr", "scalar_curvature_closed_form",
]


def _f(f) -> Expr:
    return ex.parse(f, 4) if isinstance(f, str) else ex.as_expr(f)


def toda_expr(f) -> Expr:
    """``e^{2f} (d11 f + d22 f) + d33 f + d44 f`` as an expression."""
    f = _f(f)
    l1, l2 = laplacian_parts(f)
    return ex.add(ex.mul(ex.exp(ex.mul(ex.Const(2.0), f)), l1), l2)


def toda_residual(f, p) -> float:
    return float(ex.evaluate(toda_expr(f), np.asarray(p, dtype=float)))


def biharmonic_defect(f, p) -> tuple[float, float]:
    """``(|d11 f + d22 f|, |d33 f + d44 f|)`` at ``p``."""
    l1, l2 = laplacian_parts(_f(f))
    p = np.asarray(p, dtype=float)
    return abs(float(ex.evaluate(l1, p))), abs(float(ex.evaluate(l2, p)))


def symmetric_ricci(W: WeylChart, p) -> np.ndarray:
    ric = W.jet(p).ricci
    return 0.5 * (ric + ric.T)


def einstein_weyl_defect(W: WeylChart, p) -> float:
    """g-norm of the trace-free symmetric part of the Weyl Ricci tensor."""
    J = W.jet(p)
    S = 0.5 * (J.ricci + J.ricci.T)
    tr = float(np.sum(J.ginv * S))
    T = S - (tr / W.dim) * J.g
    return float(np.sqrt(max(np.einsum("ac,bd,ab,cd->", J.ginv, J.ginv, T, T), 0.0)))


def weyl_scalar_curvature(W: WeylChart, p) -> float:
    """Trace with respect to ``g`` of the symmetric Weyl Ricci tensor."""
    J = W.jet(p)
    return float(np.sum(J.ginv * J.ricci))


def scalar_curvature_closed_form(f, p) -> float:
    """``2 (d11 f + d22 f) - 2 e^{-2f} (d33 f + d44 f)`` for the product ``[g1 + e^{2f} g2]``."""
    f = _f(f)
    l1, l2 = laplacian_parts(f)
    p = np.asarray(p, dtype=float)
    return float(2.0 * ex.evaluate(l1, p) - 2.0 * np.exp(-2.0 * ex.evaluate(f, p)) * ex.evaluate(l2, p))
