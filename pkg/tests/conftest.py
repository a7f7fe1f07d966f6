import numpy as np
import pytest
from hypothesis import settings

from weylkit import expr as ex
from weylkit.fields import Chart

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def random_poly(rng, dim, degree=2, scale=0.5, nterms=4):
    """Random polynomial expression in x1..x{dim} with small coefficients."""
    acc = ex.Const(float(rng.normal(0.0, scale)))
    for _ in range(nterms):
        term = ex.Const(float(rng.normal(0.0, scale)))
        for _ in range(int(rng.integers(1, degree + 1))):
            term = ex.mul(term, ex.var(int(rng.integers(0, dim))))
        acc = ex.add(acc, term)
    return acc


def random_spd_metric(rng, dim, scale=0.3):
    """``g = 2 Id + A^T A`` with linear polynomial entries of ``A`` (SPD everywhere)."""
    A = [[random_poly(rng, dim, degree=1, scale=scale, nterms=2) for _ in range(dim)] for _ in range(dim)]
    g = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        for j in range(i, dim):
            acc = ex.Const(2.0 if i == j else 0.0)
            for k in range(dim):
                acc = ex.add(acc, ex.mul(A[k][i], A[k][j]))
            g[i][j] = g[j][i] = acc
    return g


def random_weyl_chart(rng, dim):
    from weylkit.weyl import WeylChart
    chart = Chart.cube(dim)
    return WeylChart(chart, random_spd_metric(rng, dim), [random_poly(rng, dim) for _ in range(dim)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_acceptance_lines = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        verdict = "PASS" if report.passed else "FAIL"
        _acceptance_lines.append((props["criterion"], f"{verdict}  {props['criterion']}  {props.get('detail', '')}"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    def key(label):
        head = label.split()[0]
        return int(head.rstrip("abcdefgh")), head
    for _, line in sorted(_acceptance_lines, key=lambda t: key(t[0])):
        terminalreporter.write_line(line)
