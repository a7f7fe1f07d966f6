"""Weyl connections on a chart from a gauge metric ``g`` and a Lee form ``theta``.

The Weyl connection is ``D_X Y = nabla_X Y + theta(X) Y + theta(Y) X - g(X, Y) theta#``
where ``nabla`` is the Levi-Civita connection of ``g``.  Every quantity is
computed at a point from exact symbolic derivatives of ``g`` and ``theta``;
no finite differences are involved.

Index layout of returned arrays (0-based coordinates):

* Christoffel symbols ``G[k, i, j]`` with ``D_{d_i} d_j = G[k, i, j] d_k``.
* Curvature ``R[i, j, k, l] = g(R_{d_i, d_j} d_k, d_l)`` with
  ``R_{X,Y} = [D_X, D_Y] - D_{[X,Y]}``.
* Faraday form ``F[i, j] = d_i theta_j - d_j theta_i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import expr as ex
from .expr import Expr
from .fields import Chart, sample_points
from .tensor_core import (KFormValue, MetricValue, TensorValue, antisymmetrize,
                          is_antisymmetric, _perms_with_sign)

__all__ = [
    "WeylChart", "KFormField", "WeylJet", "levi_civita_christoffels", "weyl_christoffels",
    "weyl_curvature", "faraday", "weyl_ricci", "pair_symmetry_defect",
    "pair_symmetry_rhs", "covderiv_weightless_form", "covderiv_weightless_form_direct",
    "minimal_lee_form", "gauge_transform", "metric_defect", "wedge_arrays",
    "interior_array", "tilde_action",
]


def _as_expr_matrix(g, dim: int | None) -> tuple[tuple[Expr, ...], ...]:
    rows = []
    for row in g:
        rows.append(tuple(ex.parse(e, dim) if isinstance(e, str) else ex.as_expr(e) for e in row))
    return tuple(rows)


def _as_expr_vector(v, dim: int | None) -> tuple[Expr, ...]:
    return tuple(ex.parse(e, dim) if isinstance(e, str) else ex.as_expr(e) for e in v)


@dataclass(frozen=True, eq=False)
class WeylChart:
    """A chart with a gauge metric ``g`` and Lee form ``theta`` (both expression-valued).

    ``g`` and ``theta`` accept expressions or strings in the expression grammar.
    ``lee_mod_exact`` optionally gives a Lee form differing from ``theta`` by an
    exact form; the Faraday form is then computed from it, so ``d(du) = 0``
    holds exactly rather than up to rounding.  :func:`gauge_transform` sets it.
    """

    chart: Chart
    g: tuple
    theta: tuple = None
    lee_mod_exact: tuple = field(default=None, repr=False)

    def __post_init__(self):
        n = self.chart.dim
        g = _as_expr_matrix(self.g, n)
        if len(g) != n or any(len(r) != n for r in g):
            raise ValueError(f"metric must be {n}x{n}")
        for i in range(n):
            for j in range(i):
                if g[i][j] != g[j][i]:
                    raise ValueError(f"metric entries ({i + 1},{j + 1}) and ({j + 1},{i + 1}) differ")
        theta = (ex.ZERO,) * n if self.theta is None else _as_expr_vector(self.theta, n)
        if len(theta) != n:
            raise ValueError(f"Lee form must have {n} components")
        for e in [x for row in g for x in row] + list(theta):
            bad = [k for k in ex.free_vars(e) if k >= n]
            if bad:
                raise ValueError(f"expression {e} uses x{bad[0] + 1} outside the chart")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "theta", theta)
        if self.lee_mod_exact is not None:
            base = _as_expr_vector(self.lee_mod_exact, n)
            if len(base) != n:
                raise ValueError(f"Lee form must have {n} components")
            object.__setattr__(self, "lee_mod_exact", base)

    @property
    def dim(self) -> int:
        return self.chart.dim

    @classmethod
    def flat(cls, chart: Chart, theta=None) -> "WeylChart":
        n = chart.dim
        g = [[ex.ONE if i == j else ex.ZERO for j in range(n)] for i in range(n)]
        return cls(chart, g, theta)

    def with_theta(self, theta) -> "WeylChart":
        return WeylChart(self.chart, self.g, theta)

    @cached_property
    def _jet_fn(self):
        n = self.dim
        d = ex.partial
        exprs: list[Expr] = []
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        for i, j in pairs:
            exprs.append(self.g[i][j])
        for k in range(n):
            for i, j in pairs:
                exprs.append(d(self.g[i][j], k))
        for k in range(n):
            for l in range(k, n):
                for i, j in pairs:
                    exprs.append(d(d(self.g[i][j], k), l))
        exprs.extend(self.theta)
        for k in range(n):
            for i in range(n):
                exprs.append(d(self.theta[i], k))
        if self.lee_mod_exact is not None:
            for k in range(n):
                for i in range(n):
                    exprs.append(d(self.lee_mod_exact[i], k))
        return ex.lambdify(exprs), pairs

    def jet(self, p) -> "WeylJet":
        return WeylJet(self, np.asarray(p, dtype=float))

    def metric_at(self, p) -> MetricValue:
        return MetricValue(self.jet(p).g)

    def check_metric(self, samples: int = 64, seed: int = 0) -> None:
        """Raise if ``g`` fails positive definiteness at sampled points of the box."""
        for p in sample_points(self.chart, samples, seed):
            self.metric_at(p)


class WeylJet:
    """All pointwise data of a :class:`WeylChart` at one point, computed lazily."""

    def __init__(self, W: WeylChart, p: np.ndarray):
        if p.shape != (W.dim,):
            raise ValueError(f"point must have {W.dim} coordinates")
        self.W = W
        self.p = p
        fn, pairs = W._jet_fn
        vals = fn(p)
        n = W.dim
        m = len(pairs)
        rows = np.array([i for i, _ in pairs])
        cols = np.array([j for _, j in pairs])

        def sym(flat):
            out = np.empty(flat.shape[:-1] + (n, n))
            out[..., rows, cols] = flat
            out[..., cols, rows] = flat
            return out

        pos = 0
        self.g = sym(vals[pos:pos + m]); pos += m
        self.dg = sym(vals[pos:pos + n * m].reshape(n, m)); pos += n * m
        ddg = np.empty((n, n, n, n))
        for k in range(n):
            for l in range(k, n):
                block = sym(vals[pos:pos + m]); pos += m
                ddg[k, l] = block
                ddg[l, k] = block
        self.ddg = ddg
        self.theta = vals[pos:pos + n].copy(); pos += n
        self.dtheta = vals[pos:pos + n * n].reshape(n, n).copy(); pos += n * n  # [k, i] = d_k theta_i
        # derivatives of the Lee form modulo exact terms, when known
        self._dbase = vals[pos:pos + n * n].reshape(n, n).copy() if W.lee_mod_exact is not None else self.dtheta
        self.metric = MetricValue(self.g)
        self.ginv = self.metric.inverse

    @property
    def n(self) -> int:
        return self.W.dim

    @cached_property
    def dginv(self) -> np.ndarray:
        """``dginv[l, a, b] = d_l (g^{-1})^{ab}``."""
        return -np.einsum("am,lmn,nb->lab", self.ginv, self.dg, self.ginv)

    @cached_property
    def christoffel_lower(self) -> np.ndarray:
        """``[m, i, j] = 1/2 (d_i g_mj + d_j g_mi - d_m g_ij)``."""
        dg = self.dg  # [k, i, j]
        return 0.5 * (np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg)

    @cached_property
    def lc(self) -> np.ndarray:
        return np.einsum("km,mij->kij", self.ginv, self.christoffel_lower)

    @cached_property
    def dlc(self) -> np.ndarray:
        """``[l, k, i, j] = d_l Gamma^k_ij`` for the Levi-Civita connection."""
        ddg = self.ddg  # [l, k, i, j] = d_l d_k g_ij
        dlow = 0.5 * (np.transpose(ddg, (0, 2, 1, 3)) + np.transpose(ddg, (0, 2, 3, 1)) - ddg)
        # dlow[l, m, i, j] = d_l Gamma_{m,ij}
        return (np.einsum("lkm,mij->lkij", self.dginv, self.christoffel_lower)
                + np.einsum("km,lmij->lkij", self.ginv, dlow))

    @cached_property
    def theta_up(self) -> np.ndarray:
        return self.ginv @ self.theta

    @cached_property
    def weyl(self) -> np.ndarray:
        n = self.n
        eye = np.eye(n)
        th = self.theta
        return (self.lc + np.einsum("i,kj->kij", th, eye) + np.einsum("j,ki->kij", th, eye)
                - np.einsum("ij,k->kij", self.g, self.theta_up))

    @cached_property
    def dweyl(self) -> np.ndarray:
        n = self.n
        eye = np.eye(n)
        dth = self.dtheta  # [l, i]
        dth_up = np.einsum("lkm,m->lk", self.dginv, self.theta) + np.einsum("km,lm->lk", self.ginv, dth)
        return (self.dlc + np.einsum("li,kj->lkij", dth, eye) + np.einsum("lj,ki->lkij", dth, eye)
                - np.einsum("lij,k->lkij", self.dg, self.theta_up)
                - np.einsum("ij,lk->lkij", self.g, dth_up))

    @staticmethod
    def _riemann_up(G: np.ndarray, dG: np.ndarray) -> np.ndarray:
        # [i, j, k, l]: d_l-component of R(d_i, d_j) d_k
        return (np.transpose(dG, (0, 2, 3, 1)) - np.transpose(dG, (2, 0, 3, 1))
                + np.einsum("lim,mjk->ijkl", G, G) - np.einsum("ljm,mik->ijkl", G, G))

    @cached_property
    def curvature_up(self) -> np.ndarray:
        return self._riemann_up(self.weyl, self.dweyl)

    @cached_property
    def curvature(self) -> np.ndarray:
        return np.einsum("ijkm,ml->ijkl", self.curvature_up, self.g)

    @cached_property
    def lc_curvature(self) -> np.ndarray:
        return np.einsum("ijkm,ml->ijkl", self._riemann_up(self.lc, self.dlc), self.g)

    @cached_property
    def faraday(self) -> np.ndarray:
        return self._dbase - self._dbase.T

    @cached_property
    def ricci(self) -> np.ndarray:
        R = self.curvature
        return 0.5 * (np.einsum("kl,aklb->ab", self.ginv, R) - np.einsum("kl,akbl->ab", self.ginv, R))


# -- k-form array helpers ---------------------------------------------------

def wedge_arrays(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shuffle-convention wedge of antisymmetric arrays (0-forms are scalars)."""
    k, l = np.ndim(a), np.ndim(b)
    outer = np.multiply.outer(a, b)
    if k == 0 or l == 0:
        return outer
    return antisymmetrize(outer, normalized=False) / (math.factorial(k) * math.factorial(l))


def interior_array(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.tensordot(v, w, axes=(0, 0))


def tilde_action(tau: np.ndarray, X: np.ndarray, omega: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Action of ``tau~_X`` on a weightless k-form representative.

    ``X^b ^ (tau# -| omega) - tau ^ (X -| omega)``.
    """
    Xflat = g @ X
    tau_up = ginv @ tau
    return wedge_arrays(Xflat, interior_array(tau_up, omega)) - wedge_arrays(tau, interior_array(X, omega))


# -- public pointwise operations -------------------------------------------

def levi_civita_christoffels(W: WeylChart, p) -> TensorValue:
    return TensorValue(W.jet(p).lc, "udd")


def weyl_christoffels(W: WeylChart, p) -> TensorValue:
    return TensorValue(W.jet(p).weyl, "udd")


def weyl_curvature(W: WeylChart, p) -> TensorValue:
    """``R(X, Y, Z, T) = g(R_{X,Y} Z, T)`` on coordinate vectors."""
    return TensorValue(W.jet(p).curvature, "dddd")


def faraday(W: WeylChart, p) -> KFormValue:
    return KFormValue(W.jet(p).faraday, 2, W.dim)


def weyl_ricci(W: WeylChart, p, frame: np.ndarray | None = None) -> TensorValue:
    """Ricci tensor ``1/2 sum_k (R(X,e_k,e_k,Y) - R(X,e_k,Y,e_k))`` (not symmetric in general).

    ``frame`` (columns) may supply an explicit g-orthonormal frame; by
    default the frame sum is done with the inverse metric.
    """
    J = W.jet(p)
    if frame is None:
        return TensorValue(J.ricci, "dd")
    E = np.asarray(frame, dtype=float)
    if np.max(np.abs(E.T @ J.g @ E - np.eye(W.dim))) > 1e-9:
        raise ValueError("frame is not g-orthonormal")
    R = J.curvature
    ric = np.zeros((W.dim, W.dim))
    for k in range(W.dim):
        e = E[:, k]
        ric += 0.5 * (np.einsum("akcb,k,c->ab", R, e, e) - np.einsum("akbc,k,c->ab", R, e, e))
    return TensorValue(ric, "dd")


def pair_symmetry_rhs(g: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Right-hand side of the pair-symmetry identity in the gauge ``g``.

    ``(F(X)^Y - F(Y)^X)(Z,T) + F(X,Y) g(Z,T) - F(Z,T) g(X,Y)`` with
    ``(A^Y)(Z,T) = g(A,Z) g(Y,T) - g(A,T) g(Y,Z)`` and ``g(F(X), Z) = F(X, Z)``.
    """
    # (F(X)^Y)(Z,T) = F(X,Z) g(Y,T) - F(X,T) g(Y,Z); indices X=a, Y=b, Z=c, T=d
    t1 = np.einsum("ac,bd->abcd", F, g) - np.einsum("ad,bc->abcd", F, g)
    t2 = np.einsum("bc,ad->abcd", F, g) - np.einsum("bd,ac->abcd", F, g)
    return t1 - t2 + np.einsum("ab,cd->abcd", F, g) - np.einsum("cd,ab->abcd", F, g)


def pair_symmetry_defect(W: WeylChart, p, raw: bool = False) -> float:
    """Max entry of ``R(X,Y,Z,T) - R(Z,T,X,Y) - rhs`` over coordinate 4-tuples.

    With ``raw=True`` the bare asymmetry ``R(X,Y,Z,T) - R(Z,T,X,Y)`` is measured instead.
    """
    J = W.jet(p)
    R = J.curvature
    asym = R - np.transpose(R, (2, 3, 0, 1))
    if raw:
        return float(np.max(np.abs(asym)))
    return float(np.max(np.abs(asym - pair_symmetry_rhs(J.g, J.faraday))))


def metric_defect(W: WeylChart, p) -> float:
    """Max entry of ``D g + 2 theta (x) g``, which vanishes for every Weyl chart."""
    J = W.jet(p)
    G = J.weyl
    Dg = J.dg - np.einsum("mai,mj->aij", G, J.g) - np.einsum("maj,im->aij", G, J.g)
    return float(np.max(np.abs(Dg + 2.0 * np.einsum("a,ij->aij", J.theta, J.g))))


@dataclass(frozen=True, eq=False)
class KFormField:
    """Expression-valued k-form on a chart (gauge representative of a weightless form).

    ``coeffs`` holds the full antisymmetric array of expressions, shape ``(n,)*k``.
    Build one from strictly increasing index tuples with :meth:`from_components`.
    """

    chart: Chart
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        n, k = self.chart.dim, self.degree
        arr = np.asarray(self.coeffs, dtype=object)
        if arr.shape != (n,) * k:
            raise ValueError(f"coefficient array must have shape {(n,) * k}")
        for idx in np.ndindex(arr.shape):
            arr[idx] = ex.as_expr(arr[idx])
        for idx in np.ndindex(arr.shape):
            for p, s in _perms_with_sign(k):
                other = arr[tuple(idx[j] for j in p)]
                want = arr[idx] if s > 0 else ex.neg(arr[idx])
                if len(set(idx)) < k:
                    if other != ex.ZERO:
                        raise ValueError("coefficients on repeated indices must vanish")
                elif other != want:
                    raise ValueError("coefficients are not antisymmetric")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_components(cls, chart: Chart, degree: int, comps: Mapping[tuple, object]) -> "KFormField":
        n = chart.dim
        arr = np.empty((n,) * degree, dtype=object)
        for idx in np.ndindex(arr.shape):
            arr[idx] = ex.ZERO
        for idx, val in comps.items():
            idx = tuple(idx)
            if len(idx) != degree or list(idx) != sorted(set(idx)):
                raise ValueError(f"component index {idx} must be strictly increasing of length {degree}")
            e = ex.parse(val, n) if isinstance(val, str) else ex.as_expr(val)
            for p, s in _perms_with_sign(degree):
                arr[tuple(idx[j] for j in p)] = e if s > 0 else ex.neg(e)
        return cls(chart, degree, arr)

    @cached_property
    def _fn(self):
        n, k = self.chart.dim, self.degree
        items = list(self.coeffs.flat)
        exprs = items + [ex.partial(e, a) for a in range(n) for e in items]
        return ex.lambdify(exprs)

    def at(self, p) -> np.ndarray:
        return self.values(p)[0]

    def values(self, p) -> tuple[np.ndarray, np.ndarray]:
        """``(omega, d omega)`` where ``domega[a, I] = d_a omega_I``."""
        n, k = self.chart.dim, self.degree
        vals = self._fn(np.asarray(p, dtype=float))
        size = n ** k
        w = vals[:size].reshape((n,) * k)
        dw = vals[size:].reshape((n,) + (n,) * k)
        return w, dw

    def form_at(self, p) -> KFormValue:
        return KFormValue(self.at(p), self.degree, self.chart.dim)

    def scaled(self, factor) -> "KFormField":
        f = ex.parse(factor, self.chart.dim) if isinstance(factor, str) else ex.as_expr(factor)
        comps = {idx: ex.mul(f, self.coeffs[idx]) for idx in itertools.combinations(range(self.chart.dim), self.degree)
                 if self.coeffs[idx] != ex.ZERO}
        return KFormField.from_components(self.chart, self.degree, comps)


def _lc_covderiv(J: WeylJet, w: np.ndarray, dw: np.ndarray) -> np.ndarray:
    """``[a, I] = (nabla_a omega)_I`` for the Levi-Civita connection of the gauge."""
    out = dw.copy()
    G = J.lc  # [c, a, i]
    for s in range(w.ndim):
        t = np.tensordot(G, w, axes=([0], [s]))  # (a, i, remaining slots)
        out -= np.moveaxis(t, 1, 1 + s)
    return out


def covderiv_weightless_form(W: WeylChart, omega: KFormField, p) -> TensorValue:
    """``(D omega)[a, I]`` for the weightless form represented by ``omega`` in the gauge ``g``.

    ``D_X omega = nabla_X omega - theta ^ (X -| omega) + X^b ^ (theta# -| omega)``.
    """
    n, k = W.dim, omega.degree
    if not 1 <= k <= n - 1:
        raise ValueError(f"degree must lie in 1..{n - 1}")
    J = W.jet(p)
    w, dw = omega.values(p)
    out = _lc_covderiv(J, w, dw)
    eye = np.eye(n)
    for a in range(n):
        out[a] += tilde_action(J.theta, eye[a], w, J.g, J.ginv)
    return TensorValue(out, "d" * (k + 1))


def covderiv_weightless_form_direct(W: WeylChart, omega: KFormField, p) -> TensorValue:
    """Same as :func:`covderiv_weightless_form`, via the Weyl Christoffel symbols.

    A weightless k-form has gauge representative of weight ``-k`` so
    ``D_a omega = d_a omega - sum Gamma^D omega + k theta_a omega``.
    """
    n, k = W.dim, omega.degree
    J = W.jet(p)
    w, dw = omega.values(p)
    out = dw.copy()
    for s in range(k):
        t = np.tensordot(J.weyl, w, axes=([0], [s]))
        out -= np.moveaxis(t, 1, 1 + s)
    out += k * np.multiply.outer(J.theta, w)
    return TensorValue(out, "d" * (k + 1))


def _frame_transform(T: np.ndarray, E: np.ndarray) -> np.ndarray:
    for s in range(T.ndim):
        T = np.moveaxis(np.tensordot(E, T, axes=(0, s)), 0, s)
    return T


def minimal_lee_form(W0: WeylChart, omega: KFormField, p, return_info: bool = False,
                     max_condition: float = 1e12):
    """Lee form ``tau`` minimising ``|nabla omega + alpha(tau)|_g`` at ``p``.

    ``alpha(tau)(X) = X^b ^ (tau# -| omega) - tau ^ (X -| omega)``.  The
    Lee form stored on ``W0`` is ignored; only its metric is used.  The
    least-squares problem is solved in a g-orthonormal frame by SVD.
    """
    n, k = W0.dim, omega.degree
    if not 1 <= k <= n - 1:
        raise ValueError(f"degree must lie in 1..{n - 1}")
    J = W0.jet(p)
    w, dw = omega.values(p)
    norm2 = np.sum(w * _raise(J.ginv, w)) / math.factorial(k)
    if not norm2 >= 1e-24:
        raise ValueError("form vanishes at this point (|omega|_g < 1e-12)")
    E = J.metric.orthonormal_frame()
    eye = np.eye(n)
    b = _frame_transform(_lc_covderiv(J, w, dw), E).ravel()
    cols = []
    for m in range(n):
        A = np.stack([tilde_action(eye[m], eye[a], w, J.g, J.ginv) for a in range(n)])
        cols.append(_frame_transform(A, E).ravel())
    A = np.stack(cols, axis=1)
    sol, _, rank, sv = np.linalg.lstsq(A, -b, rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else math.inf
    if rank < n or cond > max_condition:
        raise np.linalg.LinAlgError(f"ill-conditioned minimal Lee form problem (condition number {cond:.3e})")
    tau = KFormValue(sol, 1, n)
    if return_info:
        resid = float(np.linalg.norm(A @ sol + b))
        return tau, {"condition": cond, "residual": resid}
    return tau


def _raise(ginv: np.ndarray, w: np.ndarray) -> np.ndarray:
    for s in range(w.ndim):
        w = np.moveaxis(np.tensordot(ginv, w, axes=(1, s)), 0, s)
    return w


def gauge_transform(W: WeylChart, u) -> WeylChart:
    """Same Weyl structure in the gauge ``g' = e^{2u} g``: ``theta' = theta - du``."""
    u = ex.parse(u, W.dim) if isinstance(u, str) else ex.as_expr(u)
    if ex.free_vars(u) - set(range(W.dim)):
        raise ValueError("gauge function uses coordinates outside the chart")
    factor = ex.exp(ex.mul(ex.Const(2.0), u))
    g = [[ex.mul(factor, e) if e != ex.ZERO else ex.ZERO for e in row] for row in W.g]
    theta = [ex.sub(t, ex.partial(u, i)) for i, t in enumerate(W.theta)]
    base = W.theta if W.lee_mod_exact is None else W.lee_mod_exact
    return WeylChart(W.chart, g, theta, base)
