import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from weylkit import expr as ex
from weylkit.einstein_weyl import (
    biharmonic_defect, einstein_weyl_defect, scalar_curvature_closed_form, toda_residual,
    weyl_scalar_curvature,
)
from weylkit.fields import Chart, ComplexPoly2, re_holomorphic, sample_points
from weylkit.product import toda_product
from weylkit.weyl import WeylChart, weyl_ricci

CUBE = Chart.cube(4)


def test_toda_residual_examples():
    for p in sample_points(CUBE, 20, 0):
        assert toda_residual("x1*x3", p) == 0.0
        assert toda_residual("0", p) == 0.0
    assert toda_residual("x1^2", np.zeros(4)) == 2.0


def test_biharmonic_examples(rng):
    p = np.array([0.3, 0.1, -0.2, 0.4])
    assert biharmonic_defect("x1*x3", p) == (0.0, 0.0)
    assert biharmonic_defect("x1^2", p) == (2.0, 0.0)
    for _ in range(5):
        terms = {(int(rng.integers(0, 4)), int(rng.integers(0, 4))): complex(*rng.normal(size=2)) for _ in range(4)}
        f = re_holomorphic(ComplexPoly2.from_dict(terms))
        for q in sample_points(CUBE, 10, 1):
            a, b = biharmonic_defect(f, q)
            assert a < 1e-10 and b < 1e-10


def test_einstein_weyl_examples():
    P = toda_product("x1*x3")
    for p in sample_points(CUBE, 100, 0):
        assert einstein_weyl_defect(P.weyl, p) < 1e-9
        assert abs(weyl_scalar_curvature(P.weyl, p)) < 1e-9
    flat = WeylChart.flat(CUBE)
    assert einstein_weyl_defect(flat, np.zeros(4)) == 0.0
    assert weyl_scalar_curvature(flat, np.zeros(4)) == 0.0
    assert einstein_weyl_defect(toda_product("x1^2").weyl, np.array([1.0, 0, 0, 0])) > 0.1


def test_scalar_curvature_two_paths():
    P = toda_product("x1^2")
    for p in sample_points(CUBE, 10, 2):
        direct = float(np.sum(P.weyl.jet(p).ginv * weyl_ricci(P.weyl, p).entries))
        assert weyl_scalar_curvature(P.weyl, p) == pytest.approx(direct, rel=1e-12)
        assert weyl_scalar_curvature(P.weyl, p) == pytest.approx(scalar_curvature_closed_form("x1^2", p), rel=1e-10)
    P = toda_product("x1^2*x3 + sin(x2)*x4^2")
    for p in sample_points(CUBE, 10, 3):
        closed = scalar_curvature_closed_form("x1^2*x3 + sin(x2)*x4^2", p)
        assert weyl_scalar_curvature(P.weyl, p) == pytest.approx(closed, rel=1e-9, abs=1e-12)


def test_toda_not_biharmonic_is_einstein_weyl_but_not_scalar_flat():
    # f = ln(x1/x3): e^{2f} (d11 + d22) f = -1/x3^2 = -(d33 + d44) f, while d11 f != 0
    box = Chart((0.5, -1.0, 0.5, -1.0), (2.0, 1.0, 2.0, 1.0))
    f = "ln(x1/x3)"
    P = toda_product(f, box)
    scal = []
    for p in sample_points(box, 30, 0):
        assert abs(toda_residual(f, p)) < 1e-12
        assert biharmonic_defect(f, p)[0] > 0.1
        assert einstein_weyl_defect(P.weyl, p) < 1e-9
        scal.append(abs(weyl_scalar_curvature(P.weyl, p)))
    assert max(scal) > 0.1


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_equivalence_chain_for_biharmonic(a, b, c, d):
    f = ex.parse("x1*x3 - x2*x4 + 0.5*(x1^2 - x2^2)*x3", 4)
    P = toda_product(f)
    p = np.array([a, b, c, d])
    assert max(biharmonic_defect(f, p)) < 1e-12
    assert abs(toda_residual(f, p)) < 1e-12
    assert einstein_weyl_defect(P.weyl, p) < 1e-9
