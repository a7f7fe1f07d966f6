"""Complex structures, Nijenhuis tensors and curvature-operator holonomy checks in dimension 4.

Endomorphisms are stored as matrices ``J[k, i]``: the ``d_k`` component of
``J d_i``.  Bivectors are antisymmetric contravariant arrays with
``X ^ Y`` having entries ``X^i Y^j - X^j Y^i``; the curvature operator is the
linear extension of ``X ^ Y -> R_{X,Y}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import expr as ex
from .expr import Expr
from .fields import Chart, ComplexPoly2, sample_points
from .product import ProductWeylChart, det_expr, _sqrt
from .tensor_core import KFormValue, TensorValue, hodge, sd_asd_split
from .weyl import WeylChart, wedge_arrays

__all__ = [
    "AlmostComplexField", "factor_complex_structures", "nijenhuis", "nijenhuis_norm",
    "hyperhermitian_j_from_H", "lck_lee_form", "lck_covderiv_defect", "curvature_operator",
    "holonomy_image_rank", "endomorphism_covderiv", "bivector_from_form",
    "asd_identity_defect", "normalized_orientation", "hermitian_form",
]


@dataclass(frozen=True, eq=False)
class AlmostComplexField:
    """Expression-valued endomorphism field ``J`` on a chart (``J[k][i]``)."""

    chart: Chart
    J: tuple

    def __post_init__(self):
        n = self.chart.dim
        rows = tuple(tuple(ex.parse(e, n) if isinstance(e, str) else ex.as_expr(e) for e in row)
                     for row in self.J)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"J must be {n}x{n}")
        object.__setattr__(self, "J", rows)

    @property
    def dim(self) -> int:
        return self.chart.dim

    @cached_property
    def _fn(self):
        n = self.dim
        flat = [e for row in self.J for e in row]
        return ex.lambdify(flat + [ex.partial(e, a) for a in range(n) for e in flat])

    def values(self, p) -> tuple[np.ndarray, np.ndarray]:
        """``(J, dJ)`` with ``dJ[a, k, i] = d_a J[k, i]``."""
        n = self.dim
        v = self._fn(np.asarray(p, dtype=float))
        return v[:n * n].reshape(n, n), v[n * n:].reshape(n, n, n)

    def at(self, p) -> np.ndarray:
        return self.values(p)[0]

    def __add__(self, other: "AlmostComplexField") -> "AlmostComplexField":
        return AlmostComplexField(self.chart, [[ex.add(a, b) for a, b in zip(r, s)]
                                               for r, s in zip(self.J, other.J)])

    def scaled(self, c: float) -> "AlmostComplexField":
        return AlmostComplexField(self.chart, [[ex.mul(ex.Const(c), a) for a in r] for r in self.J])

    def compose(self, other: "AlmostComplexField") -> "AlmostComplexField":
        """``self o other`` as an endomorphism field."""
        n = self.dim
        out = []
        for k in range(n):
            row = []
            for i in range(n):
                acc: Expr = ex.ZERO
                for m in range(n):
                    acc = ex.add(acc, ex.mul(self.J[k][m], other.J[m][i]))
                row.append(acc)
            out.append(row)
        return AlmostComplexField(self.chart, out)


def _inverse2(m) -> list[list[Expr]]:
    det = det_expr(m)
    return [[ex.div(m[1][1], det), ex.div(ex.neg(m[0][1]), det)],
            [ex.div(ex.neg(m[1][0]), det), ex.div(m[0][0], det)]]


def factor_complex_structures(P: ProductWeylChart, signs: tuple[int, int] = (1, 1)):
    """``(I1, I2, I)`` from the factor volume forms of a 2+2 product.

    ``I_i`` is the endomorphism of the unit factor volume form (rotation by
    a right angle in the factor, zero on the other factor), multiplied by
    ``signs[i-1]``; ``I = I1 + I2``.
    """
    if P.n1 != 2 or P.n2 != 2:
        raise ValueError("factor complex structures need a 2+2 product")
    if any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be +1 or -1")
    blocks = []
    for which, gi, off in ((1, P.g1, 0), (2, P.g2_shifted, 2)):
        gi = [list(r) for r in gi]
        inv = _inverse2(gi)
        root = _sqrt(det_expr(gi))
        eps = ((0, 1), (-1, 0))
        s = float(signs[which - 1])
        M = [[ex.ZERO] * 4 for _ in range(4)]
        # I^k_j = sign * sum_l ginv^{kl} sqrt(det) eps_{jl}
        for k in range(2):
            for j in range(2):
                acc: Expr = ex.ZERO
                for l in range(2):
                    if eps[j][l]:
                        acc = ex.add(acc, ex.mul(ex.Const(s * eps[j][l]), ex.mul(inv[k][l], root)))
                M[off + k][off + j] = acc
        blocks.append(AlmostComplexField(P.chart, M))
    I1, I2 = blocks
    return I1, I2, I1 + I2


def normalized_orientation(signs: tuple[int, int]) -> int:
    """Orientation making ``(Y1, I1 Y1, Y2, I2 Y2)`` positive for factor signs ``signs``."""
    return int(signs[0] * signs[1])


def nijenhuis(J: AlmostComplexField, p) -> TensorValue:
    """``N[k, i, j]``: ``d_k`` component of ``[JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]`` on ``(d_i, d_j)``."""
    M, dM = J.values(p)
    # dM[a, k, i] = d_a J^k_i
    t1 = np.einsum("mi,mkj->kij", M, dM) - np.einsum("mj,mki->kij", M, dM)
    t2 = np.einsum("km,imj->kij", M, dM) - np.einsum("km,jmi->kij", M, dM)
    return TensorValue(t1 - t2, "udd")


def nijenhuis_norm(J: AlmostComplexField, p) -> float:
    return float(np.max(np.abs(nijenhuis(J, p).entries)))


def endomorphism_covderiv(W: WeylChart, J: AlmostComplexField, p) -> np.ndarray:
    """``(D_a J)^k_i`` for an endomorphism field (weight zero) under the Weyl connection of ``W``."""
    G = W.jet(p).weyl  # [k, a, m]
    M, dM = J.values(p)
    return dM + np.einsum("kam,mi->aki", G, M) - np.einsum("km,mai->aki", M, G)


def hyperhermitian_j_from_H(P: ProductWeylChart, H: ComplexPoly2, signs: tuple[int, int] = (1, -1),
                            swap_ab: bool = False, samples: int = 64, seed: int = 0,
                            tol: float = 1e-10) -> AlmostComplexField:
    """Second complex structure ``J`` built from holomorphic data ``H = a + i b``.

    ``signs`` are the factor signs of ``I = s1 I1 + s2 I2``; ``H`` is read in the
    variables ``z = x1 - i s1 x2`` and ``w = x3 + i s2 x4``.  Then
    ``J d1 = a d3 + s2 b d4`` and ``J d2 = s1 (b d3 - s2 a d4)``, extended by
    ``J^2 = -1``.  The product must have flat factors and satisfy
    ``(f2 - f1)/2 = -ln|H|`` at sampled points.  ``swap_ab`` exchanges ``a`` and
    ``b`` (a deliberately non-holomorphic variant).
    """
    if P.n1 != 2 or P.n2 != 2:
        raise ValueError("hyper-Hermitian construction needs a 2+2 product")
    for gi in (P.g1, P.g2):
        for i in range(2):
            for j in range(2):
                e = gi[i][j]
                if not (isinstance(e, ex.Const) and e.value == (1.0 if i == j else 0.0)):
                    raise ValueError("hyper-Hermitian construction needs flat factor metrics")
    s1, s2 = signs
    Hc = H.to_complex_expr(z_sign=-s1, w_sign=s2)
    a, b = Hc.re, Hc.im
    if swap_ab:
        a, b = b, a
    f = ex.mul(ex.Const(0.5), ex.sub(P.f2, P.f1))
    check = ex.lambdify([a, b, f])
    for p in sample_points(P.chart, samples, seed):
        av, bv, fv = check(p)
        mod2 = av * av + bv * bv
        if not mod2 > 0.0:
            raise ValueError(f"H vanishes at {p.tolist()}")
        if abs(fv + 0.5 * math.log(mod2)) > tol:
            raise ValueError(f"product function (f2-f1)/2 differs from -ln|H| at {p.tolist()}")
    A = [[a, ex.mul(ex.Const(s1), b)],
         [ex.mul(ex.Const(s2), b), ex.mul(ex.Const(-s1 * s2), a)]]
    r2 = ex.add(ex.mul(a, a), ex.mul(b, b))
    # -A^{-1} for the block d3,d4 -> d1,d2
    B = [[ex.div(ex.neg(a), r2), ex.div(ex.mul(ex.Const(-s2), b), r2)],
         [ex.div(ex.mul(ex.Const(-s1), b), r2), ex.div(ex.mul(ex.Const(s1 * s2), a), r2)]]
    M = [[ex.ZERO] * 4 for _ in range(4)]
    for k in range(2):
        for i in range(2):
            M[2 + k][i] = A[k][i]
            M[k][2 + i] = B[k][i]
    return AlmostComplexField(P.chart, M)


def hermitian_form(g: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``omega(X, Y) = g(JX, Y)`` as ``omega[i, j] = J[l, i] g[l, j]``."""
    return J.T @ g


def _omega_and_derivs(W: WeylChart, J: AlmostComplexField, p):
    jet = W.jet(p)
    M, dM = J.values(p)
    w = hermitian_form(jet.g, M)
    dw = np.einsum("ali,lj->aij", dM, jet.g) + np.einsum("li,alj->aij", M, jet.dg)
    return jet, M, w, dw


def lck_lee_form(W: WeylChart, J: AlmostComplexField, p) -> KFormValue:
    """The 1-form ``tau`` with ``d omega = -2 omega ^ tau`` for ``omega = g(J., .)`` in dimension 4."""
    if W.dim != 4:
        raise ValueError("the Lee form of a Hermitian structure is computed in dimension 4")
    jet, M, w, dw = _omega_and_derivs(W, J, p)
    dom = dw - np.transpose(dw, (1, 0, 2)) + np.transpose(dw, (1, 2, 0))
    # dom[i, j, k] = d_i w_jk - d_j w_ik + d_k w_ij
    idx = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    eye = np.eye(4)
    A = np.array([[wedge_arrays(w, eye[m])[t] for m in range(4)] for t in idx])
    rhs = np.array([dom[t] for t in idx])
    if abs(np.linalg.det(A)) < 1e-14:
        raise np.linalg.LinAlgError("wedge with omega is degenerate; J is not Hermitian for g")
    tau = np.linalg.solve(-2.0 * A, rhs)
    return KFormValue(tau, 1, 4)


def lck_covderiv_defect(W: WeylChart, J: AlmostComplexField, p, tau=None) -> float:
    """Max entry of ``nabla_X omega + (X ^ J tau + JX ^ tau)`` over coordinate ``X``.

    1-forms and vectors are identified with ``g``; ``tau`` defaults to
    :func:`lck_lee_form`.
    """
    jet, M, w, dw = _omega_and_derivs(W, J, p)
    if tau is None:
        tau = lck_lee_form(W, J, p).entries
    tau = np.asarray(tau, dtype=float)
    G = jet.lc
    nab = dw.copy()
    for s in range(2):
        t = np.tensordot(G, w, axes=([0], [s]))
        nab -= np.moveaxis(t, 1, 1 + s)
    Jtau = jet.g @ (M @ (jet.ginv @ tau))
    worst = 0.0
    for a in range(4):
        X = np.zeros(4)
        X[a] = 1.0
        Xb = jet.g @ X
        JXb = jet.g @ (M @ X)
        rhs = wedge_arrays(Xb, Jtau) + wedge_arrays(JXb, tau)
        worst = max(worst, float(np.max(np.abs(nab[a] + rhs))))
    return worst


def bivector_from_form(g: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Raise both indices of a 2-form: ``w^{ij} = g^{ia} g^{jb} w_ab``."""
    ginv = np.linalg.inv(g)
    return ginv @ w @ ginv.T


def curvature_operator(W: WeylChart, p, alpha) -> TensorValue:
    """``R(alpha) = 1/2 alpha^{ij} R_{d_i, d_j}`` as an endomorphism ``[l, k]``."""
    if W.dim != 4:
        raise ValueError("curvature operator checks are implemented in dimension 4")
    Rup = W.jet(p).curvature_up  # [i, j, k, l]
    alpha = np.asarray(alpha, dtype=float)
    if np.max(np.abs(alpha + alpha.T)) > 1e-12 * max(1.0, np.max(np.abs(alpha))):
        raise ValueError("bivector must be antisymmetric")
    return TensorValue(0.5 * np.einsum("ij,ijkl->lk", alpha, Rup), "ud")


def holonomy_image_rank(W: WeylChart, p, tol_svd: float = 1e-7) -> int:
    """Numerical rank of ``Lambda^2 -> End(TM)``, ``alpha -> R(alpha)``."""
    Rup = W.jet(p).curvature_up
    n = W.dim
    cols = [Rup[i, j].T.ravel() for i in range(n) for j in range(i + 1, n)]
    sv = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol_svd * sv[0]))


def asd_identity_defect(W: WeylChart, p, n1: int = 2) -> float:
    """Max over mixed coordinate pairs of ``R_{X1,X2} - F(X1,X2) Id - [F#, X1 ^ X2b]``.

    ``F#`` is the endomorphism with ``g(F#(X), Y) = F(X, Y)`` and
    ``(X ^ Yb)(Z) = g(X, Z) Y - g(Y, Z) X``.
    """
    jet = W.jet(p)
    g, ginv, F = jet.g, jet.ginv, jet.faraday
    Fs = ginv @ F.T  # Fs[k, i] = g^{kl} F[i, l]
    Rup = jet.curvature_up
    n = W.dim
    eye = np.eye(n)
    worst = 0.0
    for a in range(n1):
        for b in range(n1, n):
            X, Y = eye[a], eye[b]
            E = np.outer(Y, g @ X) - np.outer(X, g @ Y)  # Z -> g(X,Z) Y - g(Y,Z) X
            pred = F[a, b] * eye + Fs @ E - E @ Fs
            worst = max(worst, float(np.max(np.abs(Rup[a, b].T - pred))))
    return worst
