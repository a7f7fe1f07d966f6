"""Damped Newton solver for the discrete Toda-type equation on a regular 4D grid.

The discrete operator at interior nodes is

    T(f) = e^{2f} (d11 f + d22 f) + d33 f + d44 f

with second central differences ``dkk``.  Boundary nodes carry Dirichlet data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg, gmres

from . import expr as ex
from .einstein_weyl import toda_expr

__all__ = [
    "GridSpec", "GridField", "TodaProblem", "TodaResult", "discrete_toda", "toda_jvp",
    "toda_solve", "harmonic_extension", "write_grid", "read_grid", "format_grid", "parse_grid", "consistency_order",
]

MIN_SIZE, MAX_SIZE = 5, 33


@dataclass(frozen=True)
class GridSpec:
    """Regular lattice with ``sizes[k]`` nodes on ``[lo[k], hi[k]]`` per axis."""

    sizes: tuple[int, int, int, int]
    lo: tuple[float, float, float, float] = (-1.0, -1.0, -1.0, -1.0)
    hi: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if not (len(sizes) == len(lo) == len(hi) == 4):
            raise ValueError("grids are 4-dimensional")
        for n in sizes:
            if not MIN_SIZE <= n <= MAX_SIZE:
                raise ValueError(f"grid size {n} outside [{MIN_SIZE}, {MAX_SIZE}]")
        if any(not (a < b) or not math.isfinite(a) or not math.isfinite(b) for a, b in zip(lo, hi)):
            raise ValueError("grid box must have lo < hi per axis")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def uniform(cls, n: int, lo: float = -1.0, hi: float = 1.0) -> "GridSpec":
        return cls((n,) * 4, (lo,) * 4, (hi,) * 4)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.lo, self.hi, self.sizes))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    def axes(self) -> list[np.ndarray]:
        return [a + h * np.arange(n) for a, h, n in zip(self.lo, self.h, self.sizes)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(4, n1, n2, n3, n4)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))

    def refined(self) -> "GridSpec":
        """Same box with half the spacing (``2n - 1`` nodes per axis)."""
        return GridSpec(tuple(2 * n - 1 for n in self.sizes), self.lo, self.hi)

    def sample(self, f) -> "GridField":
        f = ex.parse(f, 4) if isinstance(f, str) else ex.as_expr(f)
        vals = ex.evaluate(f, self.coords())
        return GridField(self, np.broadcast_to(vals, self.sizes).astype(float))

    def zeros(self) -> "GridField":
        return GridField(self, np.zeros(self.sizes))


@dataclass(frozen=True, eq=False)
class GridField:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.spec.sizes:
            raise ValueError(f"values of shape {v.shape} do not match grid {self.spec.sizes}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1, 1:-1, 1:-1]

    def max_abs_diff(self, other: "GridField") -> float:
        return float(np.max(np.abs(self.values - other.values)))


_INNER = (slice(1, -1),) * 4


def _d2(v: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Second central difference at interior nodes."""
    def sl(offset):
        s = [slice(1, -1)] * 4
        s[axis] = slice(1 + offset, v.shape[axis] - 1 + offset)
        return tuple(s)
    return (v[sl(1)] - 2.0 * v[_INNER] + v[sl(-1)]) / (h * h)


def _parts(spec: GridSpec, v: np.ndarray):
    h = spec.h
    return _d2(v, 0, h[0]) + _d2(v, 1, h[1]), _d2(v, 2, h[2]) + _d2(v, 3, h[3])


def discrete_toda(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    """``T(f)`` at interior nodes."""
    l1, l2 = _parts(spec, values)
    return np.exp(2.0 * values[_INNER]) * l1 + l2


def toda_jvp(spec: GridSpec, values: np.ndarray, v_interior: np.ndarray) -> np.ndarray:
    """Exact Jacobian of ``T`` applied to an interior perturbation (zero on the boundary)."""
    v = np.zeros(spec.sizes)
    v[_INNER] = v_interior
    l1f, _ = _parts(spec, values)
    l1v, l2v = _parts(spec, v)
    e = np.exp(2.0 * values[_INNER])
    return e * l1v + 2.0 * e * l1f * v_interior + l2v


def _jacobian_diagonal(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    h = spec.h
    e = np.exp(2.0 * values[_INNER])
    l1f, _ = _parts(spec, values)
    return (-2.0 / h[0] ** 2 - 2.0 / h[1] ** 2) * e + 2.0 * e * l1f - 2.0 / h[2] ** 2 - 2.0 / h[3] ** 2


@dataclass(frozen=True, eq=False)
class TodaProblem:
    """Dirichlet problem ``T(f) = s`` on the interior with boundary values from ``boundary``.

    ``boundary`` is a full grid field whose boundary nodes are used; ``source``
    lives on the full grid (interior entries used); ``initial`` supplies the
    interior of the starting guess (zero by default).
    """

    boundary: GridField
    source: GridField | None = None
    initial: GridField | None = None

    def __post_init__(self):
        for name in ("source", "initial"):
            g = getattr(self, name)
            if g is not None and g.spec != self.spec:
                raise ValueError(f"{name} grid does not match the boundary grid")

    @property
    def spec(self) -> GridSpec:
        return self.boundary.spec

    @classmethod
    def from_exprs(cls, spec: GridSpec, boundary, source=None, manufactured: bool = False) -> "TodaProblem":
        """Problem with boundary data sampled from an expression.

        With ``manufactured=True`` the source is the discrete operator applied
        to the sampled boundary expression, so it is the exact discrete solution.
        """
        b = spec.sample(boundary)
        if manufactured:
            if source is not None:
                raise ValueError("manufactured problems derive their own source")
            s = np.zeros(spec.sizes)
            s[_INNER] = discrete_toda(spec, b.values)
            return cls(b, GridField(spec, s))
        return cls(b, None if source is None else spec.sample(source))

    def start(self) -> np.ndarray:
        v = self.boundary.values.copy()
        v[_INNER] = 0.0 if self.initial is None else self.initial.interior
        return v

    def source_interior(self) -> np.ndarray:
        if self.source is None:
            return np.zeros(tuple(n - 2 for n in self.spec.sizes))
        return self.source.interior

    def residual(self, values: np.ndarray) -> np.ndarray:
        return discrete_toda(self.spec, values) - self.source_interior()


def harmonic_extension(boundary: GridField, rtol: float = 1e-13) -> GridField:
    """Discrete harmonic field with the boundary values of ``boundary`` (a cheap initial guess)."""
    spec = boundary.spec
    h = spec.h
    shape = tuple(n - 2 for n in spec.sizes)
    n = int(np.prod(shape))

    def lap(x):
        v = np.zeros(spec.sizes)
        v[_INNER] = x.reshape(shape)
        return -sum(_d2(v, k, h[k]) for k in range(4)).ravel()

    b = boundary.values.copy()
    b[_INNER] = 0.0
    rhs = sum(_d2(b, k, h[k]) for k in range(4)).ravel()
    x, info = cg(LinearOperator((n, n), matvec=lap, dtype=float), rhs, rtol=rtol, atol=0.0, maxiter=10 * n)
    if info != 0:
        raise RuntimeError("harmonic extension did not converge")
    b[_INNER] = x.reshape(shape)
    return GridField(spec, b)


@dataclass
class TodaResult:
    field: GridField
    converged: bool
    status: str
    history: list[float] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)
    linear_iterations: list[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.history) - 1

    @property
    def residual(self) -> float:
        return self.history[-1]


def _linear_solve(spec, values, rhs, rtol):
    n = rhs.size
    shape = rhs.shape
    A = LinearOperator((n, n), matvec=lambda x: toda_jvp(spec, values, x.reshape(shape)).ravel(), dtype=float)
    diag = _jacobian_diagonal(spec, values).ravel()
    if np.any(diag == 0.0):
        diag = np.where(diag == 0.0, 1.0, diag)
    M = LinearOperator((n, n), matvec=lambda x: x / diag, dtype=float)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = gmres(A, rhs.ravel(), rtol=rtol, atol=0.0, restart=60, maxiter=50, M=M,
                    callback=cb, callback_type="pr_norm")
    if info != 0:
        # restart from the current iterate once if stagnating
        x, info = gmres(A, rhs.ravel(), x0=x, rtol=rtol, atol=0.0, restart=120, maxiter=50, M=M,
                        callback=cb, callback_type="pr_norm")
    return x.reshape(shape), count[0]


def toda_solve(prob: TodaProblem, max_iter: int = 30, tol: float = 1e-10,
               linear_rtol: float = 1e-13) -> TodaResult:
    """Damped Newton iteration; stops when the max interior residual is below ``tol``.

    Each step solves the exact Jacobian system matrix-free with
    Jacobi-preconditioned GMRES, then backtracks (halving, at most 30 times)
    until the squared residual norm satisfies the Armijo condition.
    Non-convergence returns the best iterate with ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    spec = prob.spec
    f = prob.start()
    r = prob.residual(f)
    res = float(np.max(np.abs(r))) if r.size else 0.0
    out = TodaResult(GridField(spec, f), res < tol, "converged" if res < tol else "running", [res])
    best = (res, f.copy())
    for _ in range(max_iter):
        if res < tol:
            break
        d, its = _linear_solve(spec, f, -r, linear_rtol)
        out.linear_iterations.append(its)
        phi = float(np.dot(r.ravel(), r.ravel()))
        t = 1.0
        for _halving in range(31):
            trial = f.copy()
            trial[_INNER] += t * d
            with np.errstate(over="ignore", invalid="ignore"):
                rt = prob.residual(trial)
            if np.all(np.isfinite(rt)) and float(np.dot(rt.ravel(), rt.ravel())) <= (1.0 - 1e-4 * t) * phi:
                break
            t *= 0.5
        else:
            out.status = "line_search"
            break
        f, r = trial, rt
        res = float(np.max(np.abs(r)))
        out.history.append(res)
        out.steps.append(t)
        if res < best[0]:
            best = (res, f.copy())
    out.converged = best[0] < tol
    if out.converged:
        out.status = "converged"
    elif out.status == "running":
        out.status = "max_iter"
    out.field = GridField(spec, best[1])
    return out


def format_grid(g: GridField) -> str:
    """Text form: header line then one row-major value per line (17 significant digits)."""
    s = g.spec
    head = ["toda-grid", "v1", *map(str, s.sizes), *("%.17g" % v for v in s.lo), *("%.17g" % v for v in s.h)]
    body = "\n".join("%.17g" % v for v in g.values.ravel())
    return " ".join(head) + "\n" + body + "\n"


def parse_grid(text: str) -> GridField:
    lines = text.split("\n")
    head = lines[0].split()
    if len(head) != 14 or head[0] != "toda-grid" or head[1] != "v1":
        raise ValueError("not a toda-grid v1 file")
    sizes = tuple(int(v) for v in head[2:6])
    lo = [float(v) for v in head[6:10]]
    h = [float(v) for v in head[10:14]]
    hi = tuple(a + hk * (n - 1) for a, hk, n in zip(lo, h, sizes))
    vals = np.array([float(v) for v in lines[1:] if v.strip()])
    if vals.size != int(np.prod(sizes)):
        raise ValueError(f"expected {int(np.prod(sizes))} values, found {vals.size}")
    return GridField(GridSpec(sizes, tuple(lo), hi), vals.reshape(sizes))


def write_grid(g: GridField, path) -> None:
    Path(path).write_text(format_grid(g))


def read_grid(path) -> GridField:
    return parse_grid(Path(path).read_text())


def consistency_order(f, spec: GridSpec) -> tuple[float, float, float]:
    """Observed order of the stencil against the exact Toda operator.

    Errors are measured at the interior nodes of ``spec``, which are also
    nodes of the refined grid.  Returns ``(err_h, err_h2, order)``.
    """
    f = ex.parse(f, 4) if isinstance(f, str) else ex.as_expr(f)
    exact = ex.evaluate(toda_expr(f), spec.coords())
    exact = np.broadcast_to(exact, spec.sizes)[_INNER]
    coarse = discrete_toda(spec, spec.sample(f).values)
    fine_spec = spec.refined()
    fine = discrete_toda(fine_spec, fine_spec.sample(f).values)
    # interior node (i) of the coarse grid is node 2i of the fine grid, i.e. interior index 2i-1
    fine_on_coarse = fine[(slice(1, None, 2),) * 4]
    e1 = float(np.max(np.abs(coarse - exact)))
    e2 = float(np.max(np.abs(fine_on_coarse - exact)))
    return e1, e2, math.log2(e1 / e2)
