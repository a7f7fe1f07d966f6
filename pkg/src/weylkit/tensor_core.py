"""Pointwise dense tensors and exterior algebra in dimension 2..6.

Conventions (see CONVENTIONS.md):

* k-forms are stored as fully antisymmetric covariant arrays of shape
  ``(n,)*k``; ``dx1^dx2`` has entry ``+1`` at ``(0, 1)`` and ``-1`` at ``(1, 0)``.
* The wedge product is the shuffle sum with unit coefficients,
  ``(a^b)(X1..X_{k+l}) = sum over (k,l)-shuffles of sgn * a(..) b(..)``.
* Interior products contract the first slot.
* The pairing on k-forms makes ``dx_I`` orthonormal for a flat metric,
  ``<a, b> = (1/k!) a_I b^I``.
* The Hodge star satisfies ``a ^ *b = <a, b> vol_g`` with
  ``vol_g = orientation * sqrt(det g) dx1^...^dxn``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "TensorValue", "KFormValue", "MetricValue", "wedge", "interior", "musical",
    "hodge", "sd_asd_split", "inner", "basis_form", "volume_form", "levi_civita",
    "antisymmetrize", "is_antisymmetric", "DimensionError",
]

UP, DOWN = "u", "d"


class DimensionError(ValueError):
    pass


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _perms_with_sign(k: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    return tuple((p, _perm_sign(p)) for p in itertools.permutations(range(k)))


@lru_cache(maxsize=None)
def levi_civita(n: int) -> np.ndarray:
    """Permutation symbol with ``eps[0, 1, ..., n-1] = +1``."""
    eps = np.zeros((n,) * n)
    for p, s in _perms_with_sign(n):
        eps[p] = s
    eps.flags.writeable = False
    return eps


def antisymmetrize(arr: np.ndarray, normalized: bool = True) -> np.ndarray:
    """Sum of signed slot permutations, divided by ``k!`` when ``normalized``."""
    k = arr.ndim
    if k < 2:
        return np.array(arr, dtype=float)
    out = np.zeros_like(arr, dtype=float)
    for p, s in _perms_with_sign(k):
        out += s * np.transpose(arr, p)
    return out / math.factorial(k) if normalized else out


def is_antisymmetric(arr: np.ndarray, tol: float = 1e-12) -> bool:
    arr = np.asarray(arr)
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    for a in range(arr.ndim - 1):
        p = list(range(arr.ndim))
        p[a], p[a + 1] = p[a + 1], p[a]
        if np.max(np.abs(arr + np.transpose(arr, p)), initial=0.0) > tol * scale:
            return False
    return True


@dataclass(frozen=True, eq=False)
class TensorValue:
    """Dense tensor at a point; ``variance`` has one ``'u'``/``'d'`` per slot."""

    entries: np.ndarray
    variance: str

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.ndim != len(self.variance) or any(v not in (UP, DOWN) for v in self.variance):
            raise DimensionError("variance string must have one 'u'/'d' per slot")
        if arr.ndim and (len(set(arr.shape)) != 1 or not 1 <= arr.shape[0] <= 6):
            raise DimensionError(f"bad tensor shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0] if self.entries.ndim else 0

    @property
    def rank(self) -> int:
        return self.entries.ndim

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __getitem__(self, idx):
        return self.entries[idx]


@dataclass(frozen=True, eq=False)
class KFormValue:
    """Antisymmetric covariant k-form at a point."""

    entries: np.ndarray
    degree: int
    dim: int

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if not 1 <= self.dim <= 6:
            raise DimensionError("form dimension must be in 1..6")
        if arr.shape != (self.dim,) * self.degree:
            raise DimensionError(f"entries of shape {arr.shape} do not match degree {self.degree}, dim {self.dim}")
        if not 0 <= self.degree <= self.dim:
            raise DimensionError("degree must lie in 0..dim")
        if not is_antisymmetric(arr, 1e-10):
            raise ValueError("k-form entries are not antisymmetric")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_array(cls, arr) -> "KFormValue":
        arr = np.asarray(arr, dtype=float)
        dim = arr.shape[0] if arr.ndim else 0
        if arr.ndim == 0:
            raise DimensionError("use KFormValue(entries, 0, dim) for 0-forms")
        return cls(arr, arr.ndim, dim)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __add__(self, other: "KFormValue") -> "KFormValue":
        _same(self, other)
        return KFormValue(self.entries + other.entries, self.degree, self.dim)

    def __sub__(self, other: "KFormValue") -> "KFormValue":
        _same(self, other)
        return KFormValue(self.entries - other.entries, self.degree, self.dim)

    def __mul__(self, c: float) -> "KFormValue":
        return KFormValue(self.entries * float(c), self.degree, self.dim)

    __rmul__ = __mul__

    def __neg__(self) -> "KFormValue":
        return KFormValue(-self.entries, self.degree, self.dim)

    def norm_max(self) -> float:
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0


def _same(a: KFormValue, b: KFormValue):
    if a.dim != b.dim or a.degree != b.degree:
        raise DimensionError("forms must share dimension and degree")


@dataclass(frozen=True, eq=False)
class MetricValue:
    """Symmetric positive definite matrix; rejected unless every leading minor is positive."""

    entries: np.ndarray

    def __post_init__(self):
        g = np.array(self.entries, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or not 1 <= g.shape[0] <= 6:
            raise DimensionError(f"metric must be a square matrix of size 1..6, got {g.shape}")
        scale = max(1.0, float(np.max(np.abs(g))))
        if np.max(np.abs(g - g.T)) > 1e-12 * scale:
            raise ValueError("metric is not symmetric")
        g = 0.5 * (g + g.T)
        for k in range(1, g.shape[0] + 1):
            if not np.linalg.det(g[:k, :k]) > 0.0:
                raise np.linalg.LinAlgError(f"metric is not positive definite (leading minor {k})")
        g.flags.writeable = False
        object.__setattr__(self, "entries", g)
        inv = np.linalg.inv(g)
        inv = 0.5 * (inv + inv.T)
        inv.flags.writeable = False
        object.__setattr__(self, "inverse", inv)

    @classmethod
    def identity(cls, dim: int) -> "MetricValue":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.entries))

    def orthonormal_frame(self) -> np.ndarray:
        """Columns form a g-orthonormal basis: ``E.T @ g @ E = I``."""
        L = np.linalg.cholesky(self.entries)
        return np.linalg.inv(L).T


def _metric(g) -> MetricValue:
    return g if isinstance(g, MetricValue) else MetricValue(np.asarray(g))


def basis_form(dim: int, *indices: int) -> KFormValue:
    """``dx_{i1} ^ ... ^ dx_{ik}`` from 0-based indices."""
    k = len(indices)
    arr = np.zeros((dim,) * k)
    if len(set(indices)) == k:
        for p, s in _perms_with_sign(k):
            arr[tuple(indices[j] for j in p)] = s
    return KFormValue(arr, k, dim)


def wedge(a: KFormValue, b: KFormValue) -> KFormValue:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch {a.dim} != {b.dim}")
    k, l = a.degree, b.degree
    if k + l > a.dim:
        raise DimensionError(f"degree overflow {k}+{l} > {a.dim}")
    if k == 0 or l == 0:
        return KFormValue(np.multiply.outer(a.entries, b.entries), k + l, a.dim)
    outer = np.multiply.outer(a.entries, b.entries)
    arr = antisymmetrize(outer, normalized=False) / (math.factorial(k) * math.factorial(l))
    return KFormValue(arr, k + l, a.dim)


def interior(v, w: KFormValue) -> KFormValue:
    """Contract the vector ``v`` into the first slot of ``w``."""
    vec = np.asarray(v.entries if isinstance(v, TensorValue) else v, dtype=float)
    if isinstance(v, TensorValue) and v.variance != UP:
        raise DimensionError("interior product needs a contravariant vector")
    if vec.shape != (w.dim,):
        raise DimensionError("vector and form dimensions differ")
    if w.degree == 0:
        raise DimensionError("cannot take the interior product of a 0-form")
    return KFormValue(np.tensordot(vec, w.entries, axes=(0, 0)), w.degree - 1, w.dim)


def musical(g, t: TensorValue, slot: int, direction: str) -> TensorValue:
    """Raise (``direction='raise'``) or lower one slot of ``t`` with ``g``."""
    g = _metric(g)
    if not 0 <= slot < t.rank:
        raise IndexError(f"slot {slot} out of range for rank {t.rank}")
    if t.dim != g.dim:
        raise DimensionError("metric and tensor dimensions differ")
    have = t.variance[slot]
    if direction == "raise":
        if have != DOWN:
            raise ValueError("can only raise a covariant slot")
        m, new = g.inverse, UP
    elif direction == "lower":
        if have != UP:
            raise ValueError("can only lower a contravariant slot")
        m, new = g.entries, DOWN
    else:
        raise ValueError("direction must be 'raise' or 'lower'")
    arr = np.moveaxis(np.tensordot(m, t.entries, axes=(1, slot)), 0, slot)
    var = t.variance[:slot] + new + t.variance[slot + 1:]
    return TensorValue(arr, var)


def _raise_all(ginv: np.ndarray, arr: np.ndarray) -> np.ndarray:
    out = arr
    for s in range(arr.ndim):
        out = np.moveaxis(np.tensordot(ginv, out, axes=(1, s)), 0, s)
    return out


def inner(g, a: KFormValue, b: KFormValue) -> float:
    g = _metric(g)
    _same(a, b)
    if a.dim != g.dim:
        raise DimensionError("metric and form dimensions differ")
    if a.degree == 0:
        return float(a.entries * b.entries)
    up = _raise_all(g.inverse, b.entries)
    return float(np.sum(a.entries * up) / math.factorial(a.degree))


def volume_form(g, orientation: int = 1) -> KFormValue:
    g = _metric(g)
    _check_orientation(orientation)
    return KFormValue(orientation * math.sqrt(g.det) * levi_civita(g.dim), g.dim, g.dim)


def _check_orientation(o):
    if o not in (1, -1):
        raise ValueError("orientation must be +1 or -1")


def hodge(g, orientation: int, w: KFormValue) -> KFormValue:
    g = _metric(g)
    _check_orientation(orientation)
    n, k = g.dim, w.degree
    if w.dim != n:
        raise DimensionError("metric and form dimensions differ")
    eps = levi_civita(n) * (orientation * math.sqrt(g.det))
    if k == 0:
        return KFormValue(float(w.entries) * eps, n, n)
    up = _raise_all(g.inverse, w.entries)
    arr = np.tensordot(up, eps, axes=(list(range(k)), list(range(k)))) / math.factorial(k)
    return KFormValue(arr, n - k, n)


def sd_asd_split(g, orientation: int, w: KFormValue) -> tuple[KFormValue, KFormValue]:
    """Self-dual and anti-self-dual parts of a 2-form in dimension 4."""
    if w.dim != 4 or w.degree != 2:
        raise DimensionError("self-dual splitting needs a 2-form in dimension 4")
    star = hodge(g, orientation, w)
    return 0.5 * (w + star), 0.5 * (w - star)
