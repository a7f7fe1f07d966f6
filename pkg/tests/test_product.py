import math

import numpy as np
import pytest

from weylkit import expr as ex
from weylkit.fields import Chart, sample_points
from weylkit.product import (
    build_product, fhat, mixed_faraday_check, ricci_decomposition_defect, ricci_decomposition_rhs,
    slice_ricci, toda_product, weightless_volume_form,
)
from weylkit.tensor_core import inner
from weylkit.weyl import covderiv_weightless_form, faraday, gauge_transform, weyl_christoffels, weyl_ricci

from conftest import random_poly

C2 = Chart.cube(2)
C1 = Chart.cube(1)


def _theta(P, p):
    return P.weyl.jet(p).theta


def test_flat_product_is_flat():
    P = build_product(C2, None, C2, None, "0", "0")
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.all(_theta(P, p) == 0)
    assert np.all(P.weyl.jet(p).curvature == 0)
    assert ricci_decomposition_defect(P, p) == 0


def test_adapted_lee_form_examples():
    P = build_product(C2, None, C2, None, "0", "2*x1*x3")
    for p in sample_points(P.chart, 10, 0):
        assert np.array_equal(_theta(P, p), [-p[2], 0.0, 0.0, 0.0])
        F = faraday(P.weyl, p).entries
        expect = np.zeros((4, 4))
        expect[0, 2], expect[2, 0] = 1.0, -1.0
        assert np.array_equal(F, expect)
    W = build_product(C2, None, C2, None, "x3", "0")
    assert np.array_equal(_theta(W, np.zeros(4)), [0.0, 0.0, -0.5, 0.0])


def test_weightless_volume_forms():
    P = build_product(C2, None, C2, None, "0", "2*x1*x3")
    w1, w2 = weightless_volume_form(P, 1), weightless_volume_form(P, 2)
    for p in sample_points(P.chart, 20, 1):
        assert w1.at(p)[0, 1] == 1.0
        assert w2.at(p)[2, 3] == pytest.approx(math.exp(2 * p[0] * p[2]), rel=1e-14)
        g = P.weyl.metric_at(p)
        assert inner(g, w1.form_at(p), w1.form_at(p)) == pytest.approx(1.0, rel=1e-13)
        assert inner(g, w2.form_at(p), w2.form_at(p)) == pytest.approx(1.0, rel=1e-13)
        assert np.max(np.abs(covderiv_weightless_form(P.weyl, w1, p).entries)) < 1e-10
        assert np.max(np.abs(covderiv_weightless_form(P.weyl, w2, p).entries)) < 1e-10


def _random_products(rng, count):
    out = []
    for i in range(count):
        n1, n2 = [(2, 2), (1, 2), (2, 1), (1, 3), (3, 2)][i % 5]
        n = n1 + n2
        g1 = None
        if n1 == 2 and i % 2:
            g1 = [["1 + x1^2", "0.3*x2"], ["0.3*x2", "2 + x2^2"]]
        out.append(build_product(Chart.cube(n1), g1, Chart.cube(n2), None,
                                 random_poly(rng, n, degree=3, scale=0.3),
                                 random_poly(rng, n, degree=3, scale=0.3)))
    return out


def test_invariants_on_random_products(rng):
    for P in _random_products(rng, 10):
        n1, n = P.n1, P.dim
        w = [weightless_volume_form(P, 1), weightless_volume_form(P, 2)]
        assert mixed_faraday_check(P, 20, 3) == 0.0
        for p in sample_points(P.chart, 10, 5):
            for form in w:
                if 1 <= form.degree <= n - 1:
                    assert np.max(np.abs(covderiv_weightless_form(P.weyl, form, p).entries)) < 1e-10
            ric = weyl_ricci(P.weyl, p).entries
            F = faraday(P.weyl, p).entries
            assert np.max(np.abs(0.5 * (ric - ric.T) - 0.5 * (2 - n) * F)) < 1e-9
            n2 = n - n1
            assert np.max(np.abs(ric[:n1, n1:] - (1 - n2) * F[:n1, n1:])) < 1e-9
            assert np.max(np.abs(ric[n1:, :n1] - (1 - n1) * F[n1:, :n1])) < 1e-9
            assert ricci_decomposition_defect(P, p) < 1e-8


def test_mixed_faraday_examples():
    assert mixed_faraday_check(toda_product("x1*x3"), 50, 0) == 0.0
    same = build_product(C2, None, C2, None, "x1*x3 + x2^2*x4", "x1*x3 + x2^2*x4")
    assert mixed_faraday_check(same, 50, 0) < 1e-12
    assert mixed_faraday_check(build_product(C2, None, C2, None, "0", "0"), 10, 0) == 0.0


def test_closed_when_functions_are_pullbacks():
    P = build_product(C2, None, C2, None, "x3^2 - x4", "x1*x2 + sin(x1)")
    for p in sample_points(P.chart, 20, 2):
        assert np.max(np.abs(faraday(P.weyl, p).entries)) < 1e-14


def test_fhat_symmetric_and_mixed():
    P = build_product(C1, None, C2, None, "x1*x2", "x3^2*x1")
    for p in sample_points(P.chart, 5, 0):
        H = fhat(P, p).entries
        F = faraday(P.weyl, p).entries
        assert np.array_equal(H, H.T)
        assert H[0, 0] == 0 and np.all(H[1:, 1:] == 0)
        assert np.array_equal(H[0, 1:], F[0, 1:])


def test_slice_ricci_examples():
    same = build_product(C2, None, C2, None, "x1*x3", "x1*x3")
    p = np.array([0.2, 0.3, -0.4, 0.5])
    assert np.max(np.abs(slice_ricci(same, 1, p).entries)) < 1e-14
    P = build_product(C2, None, C2, None, "0", "2*x1^2")
    assert np.max(np.abs(slice_ricci(P, 2, p).entries)) < 1e-13
    P = build_product(C2, None, C2, None, "0", "2*x1*x3")
    q = np.array([0.2, -0.4, 1.0, 0.0])
    assert np.max(np.abs(slice_ricci(P, 1, q).entries)) < 1e-13
    # slice metric e^{2u} g1 with u = -x1^2 x3, x3 frozen at 1: Ric = -(Delta u) g1 = 2 x3 g1
    P = build_product(C2, None, C2, None, "0", "2*x1^2*x3")
    assert np.allclose(slice_ricci(P, 1, q).entries, 2.0 * np.eye(2), atol=1e-12)


def test_ricci_decomposition_examples():
    P = toda_product("x1*x3")
    for p in sample_points(P.chart, 10, 0):
        ric = weyl_ricci(P.weyl, p).entries
        mixed_sym = 0.5 * (ric[:2, 2:] + ric[2:, :2].T)
        assert np.max(np.abs(mixed_sym)) < 1e-12
        assert ricci_decomposition_defect(P, p) < 1e-8
    warped = build_product(C1, None, C2, [["1", "0"], ["0", "1 + x2^2"]], "x1*x2 - x3", "x1^2 + x2*x3")
    for p in sample_points(warped.chart, 20, 1):
        assert ricci_decomposition_defect(warped, p) < 1e-8
        assert ricci_decomposition_rhs(warped, p).shape == (3, 3)


def test_equal_difference_gives_same_structure():
    # f1 - f2 fixed: the two gauges differ by a conformal factor, so the Weyl connections agree
    A = build_product(C2, None, C2, None, "x1*x3", "x2 - x4^2")
    B = build_product(C2, None, C2, None, "x1*x3 + 0.5*x2*x4", "x2 - x4^2 + 0.5*x2*x4")
    for p in sample_points(A.chart, 10, 4):
        assert np.max(np.abs(weyl_christoffels(A.weyl, p).entries - weyl_christoffels(B.weyl, p).entries)) < 1e-10
    u = ex.parse("0.25*x2*x4", 4)
    G = gauge_transform(A.weyl, u)
    for p in sample_points(A.chart, 5, 4):
        assert np.max(np.abs(G.jet(p).theta - B.weyl.jet(p).theta)) < 1e-12


def test_build_errors():
    with pytest.raises(np.linalg.LinAlgError):
        build_product(C2, [["1", "0"], ["0", "-1"]], C2, None, "0", "0")
    with pytest.raises(ValueError):
        build_product(Chart.cube(3), None, Chart.cube(4), None, "0", "0")
    with pytest.raises(ValueError):
        toda_product("x1", Chart.cube(3))
