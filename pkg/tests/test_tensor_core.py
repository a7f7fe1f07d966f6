import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from weylkit.tensor_core import (
    DimensionError, KFormValue, MetricValue, TensorValue, antisymmetrize, basis_form, hodge, inner,
    interior, is_antisymmetric, musical, sd_asd_split, volume_form, wedge,
)


def _form(rng, dim, k):
    return KFormValue(antisymmetrize(rng.normal(size=(dim,) * k)), k, dim)


def _spd(rng, dim):
    A = rng.normal(size=(dim, dim))
    return MetricValue(A @ A.T + dim * np.eye(dim))


def _all_transpositions_antisymmetric(w: KFormValue):
    for a, b in itertools.combinations(range(w.degree), 2):
        perm = list(range(w.degree))
        perm[a], perm[b] = b, a
        if not np.allclose(np.transpose(w.entries, perm), -w.entries, atol=1e-12):
            return False
    return True


# ------------------------------------------------------------ wedge / interior

def test_wedge_basis_cases():
    assert np.all(wedge(basis_form(4, 0), basis_form(4, 0)).entries == 0)
    w = wedge(basis_form(4, 0), basis_form(4, 1))
    assert w.entries[0, 1] == 1.0 and w.entries[1, 0] == -1.0
    vol = wedge(basis_form(4, 0, 1), basis_form(4, 2, 3))
    assert np.array_equal(vol.entries, basis_form(4, 0, 1, 2, 3).entries)
    assert vol.entries[0, 1, 2, 3] == 1.0


def test_wedge_shuffle_oracle(rng):
    # (a^b)(X1..X3) = sum over (1,2)-shuffles sgn a(X_s1) b(X_s2, X_s3)
    a, b = _form(rng, 4, 1), _form(rng, 4, 2)
    w = wedge(a, b).entries
    for i, j, k in itertools.product(range(4), repeat=3):
        oracle = a.entries[i] * b.entries[j, k] - a.entries[j] * b.entries[i, k] + a.entries[k] * b.entries[i, j]
        assert w[i, j, k] == pytest.approx(oracle, abs=1e-12)


def test_wedge_errors():
    with pytest.raises(DimensionError):
        wedge(basis_form(3, 0), basis_form(4, 0))
    with pytest.raises(DimensionError):
        wedge(basis_form(3, 0, 1), basis_form(3, 1, 2))


def test_interior_examples():
    e = np.eye(4)
    assert np.array_equal(interior(e[0], basis_form(4, 0, 1)).entries, basis_form(4, 1).entries)
    assert np.all(interior(e[2], basis_form(4, 0, 1)).entries == 0)
    assert np.array_equal(interior(e[0], basis_form(4, 0, 1, 2)).entries, basis_form(4, 1, 2).entries)
    with pytest.raises(DimensionError):
        interior(e[0], KFormValue(np.array(1.0), 0, 4))


def test_kform_rejects_non_antisymmetric():
    with pytest.raises(ValueError):
        KFormValue(np.ones((3, 3)), 2, 3)


@given(st.integers(2, 6), st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**32 - 1))
def test_graded_commutativity(dim, k, l, seed):
    if k + l > dim:
        return
    rng = np.random.default_rng(seed)
    a, b = _form(rng, dim, k), _form(rng, dim, l)
    ab, ba = wedge(a, b), wedge(b, a)
    assert np.allclose(ab.entries, (-1) ** (k * l) * ba.entries, atol=1e-12)
    assert _all_transpositions_antisymmetric(ab)


def test_graded_commutativity_1000_trials(rng):
    for _ in range(1000):
        dim = int(rng.integers(2, 7))
        k = int(rng.integers(0, min(3, dim) + 1))
        l = int(rng.integers(0, min(3, dim - k) + 1))
        a, b = _form(rng, dim, k), _form(rng, dim, l)
        assert np.max(np.abs(wedge(a, b).entries - (-1) ** (k * l) * wedge(b, a).entries)) <= 1e-12


@given(st.integers(2, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_interior_twice_vanishes(dim, k, seed):
    if k > dim:
        return
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim)
    w = _form(rng, dim, k)
    once = interior(v, w)
    assert _all_transpositions_antisymmetric(once)
    if k >= 2:
        assert np.allclose(interior(v, once).entries, 0, atol=1e-12)


# ------------------------------------------------------------ musical / inner

def test_musical_examples():
    I4 = MetricValue.identity(4)
    dx1 = TensorValue(np.eye(4)[0], "d")
    assert np.array_equal(musical(I4, dx1, 0, "raise").entries, np.eye(4)[0])
    g = MetricValue(np.diag([1, 1, math.exp(1.0), math.exp(1.0)]))
    up = musical(g, TensorValue(np.eye(4)[2], "d"), 0, "raise")
    assert up.entries[2] == pytest.approx(math.exp(-1.0), rel=1e-15)
    assert up.variance == "u"


def test_musical_roundtrip(rng):
    for _ in range(20):
        g = _spd(rng, 4)
        t = TensorValue(rng.normal(size=(4, 4)), "dd")
        back = musical(g, musical(g, t, 1, "raise"), 1, "lower")
        assert np.allclose(back.entries, t.entries, atol=1e-12)


def test_musical_errors():
    with pytest.raises(ValueError):
        musical(MetricValue.identity(2), TensorValue(np.ones(2), "u"), 0, "raise")
    with pytest.raises(IndexError):
        musical(MetricValue.identity(2), TensorValue(np.ones(2), "d"), 1, "raise")
    with pytest.raises(np.linalg.LinAlgError):
        MetricValue(np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        MetricValue(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_inner_examples():
    I4 = MetricValue.identity(4)
    assert inner(I4, basis_form(4, 0), basis_form(4, 0)) == 1.0
    assert inner(I4, basis_form(4, 0, 1), basis_form(4, 2, 3)) == 0.0
    assert inner(I4, basis_form(4, 0, 1), basis_form(4, 0, 1)) == 1.0
    g = MetricValue(np.diag([1, 1, math.exp(0.6), math.exp(0.6)]))
    assert inner(g, basis_form(4, 2), basis_form(4, 2)) == pytest.approx(math.exp(-0.6), rel=1e-15)
    with pytest.raises(ValueError):
        inner(I4, basis_form(4, 0), basis_form(4, 0, 1))


def test_inner_positive_definite_and_symmetric(rng):
    for _ in range(20):
        g = _spd(rng, 5)
        a, b = _form(rng, 5, 2), _form(rng, 5, 2)
        assert inner(g, a, b) == pytest.approx(inner(g, b, a), rel=1e-12)
        assert inner(g, a, a) > 0


# ------------------------------------------------------------ Hodge star

def test_hodge_flat_examples():
    assert np.array_equal(hodge(MetricValue.identity(2), 1, basis_form(2, 0)).entries, basis_form(2, 1).entries)
    assert np.array_equal(hodge(MetricValue.identity(4), 1, basis_form(4, 0, 1)).entries,
                          basis_form(4, 2, 3).entries)
    assert np.array_equal(hodge(MetricValue.identity(4), -1, basis_form(4, 0, 1)).entries,
                          -basis_form(4, 2, 3).entries)


def test_hodge_conformal_example():
    g = MetricValue(np.diag([1, 1, math.exp(0.6), math.exp(0.6)]))
    star = hodge(g, 1, basis_form(4, 0, 1))
    assert np.allclose(star.entries, math.exp(0.6) * basis_form(4, 2, 3).entries, rtol=1e-14, atol=0)


def _hodge_frame_oracle(g: MetricValue, orientation: int, w: KFormValue) -> np.ndarray:
    """Hodge star computed in a g-orthonormal frame by permuting basis indices."""
    n, k = g.dim, w.degree
    E = g.orthonormal_frame()  # columns are orthonormal vectors
    coframe = np.linalg.inv(E)  # rows are the dual coframe
    s = orientation * np.sign(np.linalg.det(E))
    wf = w.entries
    for slot in range(k):
        wf = np.moveaxis(np.tensordot(E.T, wf, axes=(1, slot)), 0, slot)
    out = np.zeros((n,) * (n - k))
    for I in itertools.combinations(range(n), k):
        J = tuple(i for i in range(n) if i not in I)
        perm = I + J
        sign = np.linalg.det(np.eye(n)[list(perm)])
        # e^J as a coordinate form
        eJ = KFormValue(np.array(1.0), 0, n)
        for j in J:
            eJ = wedge(eJ, KFormValue(coframe[j], 1, n))
        out = out + s * sign * wf[I] * eJ.entries
    return out


@given(st.integers(2, 6), st.integers(0, 6), st.sampled_from([1, -1]), st.integers(0, 2**32 - 1))
def test_hodge_matches_frame_oracle(n, k, o, seed):
    if k > n:
        return
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    w = _form(rng, n, k) if k else KFormValue(np.array(rng.normal()), 0, n)
    assert np.allclose(hodge(g, o, w).entries, _hodge_frame_oracle(g, o, w), atol=1e-10)


@given(st.integers(2, 6), st.integers(0, 6), st.integers(0, 2**32 - 1))
def test_hodge_defining_identity_and_square(n, k, seed):
    if k > n:
        return
    rng = np.random.default_rng(seed)
    g = _spd(rng, n)
    mk = (lambda: _form(rng, n, k)) if k else (lambda: KFormValue(np.array(rng.normal()), 0, n))
    w, s = mk(), mk()
    lhs = wedge(w, hodge(g, 1, s)).entries
    rhs = inner(g, w, s) * volume_form(g, 1).entries
    assert np.max(np.abs(lhs - rhs)) < 1e-10
    twice = hodge(g, 1, hodge(g, 1, w)).entries
    assert np.allclose(twice, (-1) ** (k * (n - k)) * w.entries, atol=1e-10)


# ------------------------------------------------------------ (anti-)self-dual split

def test_split_flat_basis():
    I4 = MetricValue.identity(4)
    sd, asd = sd_asd_split(I4, 1, basis_form(4, 0, 1))
    assert np.array_equal(sd.entries, 0.5 * (basis_form(4, 0, 1) + basis_form(4, 2, 3)).entries)
    assert np.array_equal(asd.entries, 0.5 * (basis_form(4, 0, 1) - basis_form(4, 2, 3)).entries)
    again = sd_asd_split(I4, 1, sd)
    assert np.array_equal(again[0].entries, sd.entries) and np.all(again[1].entries == 0)


def test_split_errors():
    with pytest.raises(DimensionError):
        sd_asd_split(MetricValue.identity(4), 1, basis_form(4, 0))
    with pytest.raises(DimensionError):
        sd_asd_split(MetricValue.identity(3), 1, basis_form(3, 0, 1))


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, -1]))
def test_split_eigen_and_orthogonal(seed, o):
    rng = np.random.default_rng(seed)
    g = _spd(rng, 4)
    w = _form(rng, 4, 2)
    sd, asd = sd_asd_split(g, o, w)
    assert np.max(np.abs(hodge(g, o, sd).entries - sd.entries)) < 1e-12 * max(1, np.abs(w.entries).max()) * 10
    assert np.max(np.abs(hodge(g, o, asd).entries + asd.entries)) < 1e-11
    assert abs(inner(g, sd, asd)) < 1e-12 * max(1.0, inner(g, w, w)) * 10
    assert np.allclose((sd + asd).entries, w.entries, atol=1e-15)


def test_tensor_value_validation():
    with pytest.raises(ValueError):
        TensorValue(np.ones((3, 3)), "d")
    with pytest.raises(ValueError):
        TensorValue(np.ones((7, 7)), "dd")
    assert is_antisymmetric(basis_form(3, 0, 2).entries)
