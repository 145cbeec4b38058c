"""Finite-difference solvers on the triangle ``a <= x1 <= x2 <= b``.

Nodes are ``(i, j)`` with ``0 <= i <= j <= n`` at ``x1 = a + i*h``,
``x2 = a + j*h``. They are stored in an ``(n+1, n+1)`` array whose entries
below the diagonal (``i > j``) are never read or written and hold NaN.

The 5-point stencil closes exactly on the triangle: every neighbour of an
interior node is either interior or a boundary node, so no ghost points are
needed. Both solvers use successive over-relaxation with the relaxation
factor ``2 / (1 + sin(pi/n))`` and stop on the max-norm of the discrete
residual ``|Lap_h u - f|``.

The Laplace data jump from 1 to 0 at the vertices ``(a, a)`` and ``(b, b)``.
Near such a vertex the solution is a function of the angle alone, so the
discretisation error at a fixed number of cells from the vertex does not
shrink with ``h``. :func:`solve_laplace_triangle` therefore subtracts the two
exact wedge solutions (see :func:`corner_singularity`) and solves for the
continuous remainder, which converges at second order up to the vertices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .errors import NonConvergence
from .geometry import IntervalSpec

_CHECK_EVERY = 10


class NodeTag(enum.IntEnum):
    OUTSIDE = -1
    INTERIOR = 0
    DIAGONAL = 1
    LEFT_LEG = 2
    RIGHT_LEG = 3


@dataclass
class TriangleGrid:
    a: float
    b: float
    n: int
    values: np.ndarray
    tags: np.ndarray

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """``(x1, x2)`` arrays matching ``values`` (meshgrid with ``ij`` indexing)."""
        x = self.a + self.h * np.arange(self.n + 1)
        return np.meshgrid(x, x, indexing="ij")

    def interior_mask(self) -> np.ndarray:
        return self.tags == NodeTag.INTERIOR

    def corner_distance_mask(self, cells: float) -> np.ndarray:
        """Interior nodes at least ``cells * h`` away from all three vertices."""
        x1, x2 = self.coordinates()
        a, b, r = self.a, self.b, cells * self.h
        far = np.ones_like(x1, dtype=bool)
        for c1, c2 in ((a, a), (b, b), (a, b)):
            far &= np.hypot(x1 - c1, x2 - c2) >= r - 1e-12 * (b - a)
        return far & self.interior_mask()

    def interpolate(self, x1: float, x2: float) -> float:
        """Piecewise-linear interpolation on the triangulation aligned with the diagonal."""
        s1 = (x1 - self.a) / self.h
        s2 = (x2 - self.a) / self.h
        i = min(int(math.floor(s1)), self.n - 1)
        j = min(int(math.floor(s2)), self.n - 1)
        i, j = max(i, 0), max(j, 0)
        f1, f2 = s1 - i, s2 - j
        u = self.values
        if f2 >= f1:
            # vertices (i,j), (i,j+1), (i+1,j+1)
            return float(u[i, j] + f2 * (u[i, j + 1] - u[i, j]) + f1 * (u[i + 1, j + 1] - u[i, j + 1]))
        return float(u[i, j] + f1 * (u[i + 1, j] - u[i, j]) + f2 * (u[i + 1, j + 1] - u[i + 1, j]))

    def to_rows(self):
        """Yield ``(i, j, x1, x2, value)`` for every node of the closed triangle."""
        h = self.h
        for i in range(self.n + 1):
            for j in range(i, self.n + 1):
                yield i, j, self.a + i * h, self.a + j * h, float(self.values[i, j])


@dataclass
class SolveReport:
    iterations: int
    final_residual: float
    values: TriangleGrid


def make_tags(n: int) -> np.ndarray:
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    tags = np.full((n + 1, n + 1), NodeTag.OUTSIDE, dtype=np.int8)
    tags[i <= j] = NodeTag.INTERIOR
    tags[i == j] = NodeTag.DIAGONAL
    # legs win at the corners where they meet the diagonal
    tags[(i == 0) & (j >= 0)] = NodeTag.LEFT_LEG
    tags[(j == n) & (i <= n)] = NodeTag.RIGHT_LEG
    return tags


@numba.njit(cache=True)
def _sweep_lex(u, f, h2, w, n):
    for i in range(1, n - 1):
        for j in range(i + 1, n):
            gs = 0.25 * (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1] - h2 * f[i, j])
            u[i, j] += w * (gs - u[i, j])


@numba.njit(cache=True)
def _sweep_colour(u, f, h2, w, n, colour):
    for i in range(1, n - 1):
        start = i + 1
        if (i + start) % 2 != colour:
            start += 1
        for j in range(start, n, 2):
            gs = 0.25 * (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1] - h2 * f[i, j])
            u[i, j] += w * (gs - u[i, j])


@numba.njit(cache=True)
def _residual(u, f, h2, n):
    worst = 0.0
    for i in range(1, n - 1):
        for j in range(i + 1, n):
            r = (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1] - 4.0 * u[i, j]) / h2 - f[i, j]
            r = abs(r)
            if r > worst:
                worst = r
    return worst


def laplacian_residual(u: np.ndarray, h: float, rhs: np.ndarray | None = None) -> float:
    """Max-norm of ``Lap_h u - rhs`` over interior nodes of the triangle."""
    n = u.shape[0] - 1
    f = np.zeros_like(u) if rhs is None else np.nan_to_num(np.asarray(rhs, dtype=float))
    return float(_residual(np.ascontiguousarray(u, dtype=float), f, h * h, n))


def _field(spec, x1, x2):
    if spec is None:
        return np.zeros_like(x1)
    if callable(spec):
        return np.asarray(spec(x1, x2), dtype=float) * np.ones_like(x1)
    return np.asarray(spec, dtype=float)


def solve_dirichlet_triangle(
    iv: IntervalSpec,
    n: int,
    boundary: Callable | np.ndarray | None = None,
    rhs: Callable | np.ndarray | None = None,
    tol: float = 1e-7,
    ordering: str = "redblack",
    max_iter: int | None = None,
) -> SolveReport:
    """Solve ``Lap u = rhs`` with Dirichlet data ``boundary`` on the triangle.

    Parameters
    ----------
    boundary, rhs : callable ``(x1, x2) -> array`` or an ``(n+1, n+1)`` array
        Only boundary nodes of ``boundary`` and interior nodes of ``rhs`` are
        read. ``None`` means zero.
    tol : float
        Target for the max-norm of the discrete residual.
    ordering : {"redblack", "lexicographic"}
    """
    if n < 8:
        raise ValueError("need at least 8 subdivisions per side")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if ordering not in ("redblack", "lexicographic"):
        raise ValueError(f"unknown ordering {ordering!r}")
    a, b = iv.a, iv.b
    h = (b - a) / n
    tags = make_tags(n)
    x = a + h * np.arange(n + 1)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    interior = tags == NodeTag.INTERIOR
    u = np.where(interior, 0.0, _field(boundary, x1, x2))
    f = np.where(interior, _field(rhs, x1, x2), 0.0)
    u = np.ascontiguousarray(u, dtype=float)
    f = np.ascontiguousarray(f, dtype=float)
    h2 = h * h
    w = 2.0 / (1.0 + math.sin(math.pi / n))
    cap = 50 * n * n if max_iter is None else max_iter

    it = 0
    res = _residual(u, f, h2, n)
    while res > tol and it < cap:
        for _ in range(min(_CHECK_EVERY, cap - it)):
            if ordering == "redblack":
                _sweep_colour(u, f, h2, w, n, 0)
                _sweep_colour(u, f, h2, w, n, 1)
            else:
                _sweep_lex(u, f, h2, w, n)
            it += 1
        res = _residual(u, f, h2, n)
    if res > tol:
        raise NonConvergence(it, res)
    u[tags == NodeTag.OUTSIDE] = np.nan
    return SolveReport(it, float(res), TriangleGrid(a, b, n, u, tags))


def corner_singularity(iv: IntervalSpec, x1, x2) -> np.ndarray:
    """Sum of the harmonic wedge solutions at the two jump vertices.

    ``(4/pi) atan((x1-a)/(x2-a))`` is 1 on the diagonal and 0 on ``x1 = a``;
    its mirror image at ``b`` is 1 on the diagonal and 0 on ``x2 = b``. At a
    vertex itself both terms take the value 0 of the leg.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    near_a = np.arctan2(x1 - iv.a, x2 - iv.a)
    near_b = np.arctan2(iv.b - x2, iv.b - x1)
    return 4.0 / math.pi * (near_a + near_b)


def solve_laplace_triangle(
    iv: IntervalSpec, n: int, tol: float = 1e-7, ordering: str = "redblack", subtract_corners: bool = True
) -> SolveReport:
    """Harmonic function equal to 1 on the diagonal and 0 on the legs.

    With ``subtract_corners`` (default) the grid holds ``v + S`` where ``S`` is
    :func:`corner_singularity` and ``v`` the discrete harmonic remainder;
    ``final_residual`` refers to ``v``. The sum is clipped to ``[0, 1]``.
    Without it the plain 5-point solution is returned, which obeys the
    discrete maximum principle exactly but keeps an O(1) error within a
    few cells of the two jump vertices.
    """
    tags = make_tags(n)
    diagonal = (tags == NodeTag.DIAGONAL).astype(float)
    if not subtract_corners:
        return solve_dirichlet_triangle(iv, n, boundary=diagonal, tol=tol, ordering=ordering)
    h = (iv.b - iv.a) / n
    x = iv.a + h * np.arange(n + 1)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    singular = corner_singularity(iv, x1, x2)
    rep = solve_dirichlet_triangle(iv, n, boundary=diagonal - singular, tol=tol, ordering=ordering)
    grid = rep.values
    values = np.clip(grid.values + singular, 0.0, 1.0)
    values[tags == NodeTag.OUTSIDE] = np.nan
    return SolveReport(rep.iterations, rep.final_residual, TriangleGrid(grid.a, grid.b, n, values, tags))


def solve_poisson_triangle(iv: IntervalSpec, n: int, rhs, tol: float = 1e-7, ordering: str = "redblack") -> SolveReport:
    """Solve ``Lap w = rhs`` with ``w = 0`` on all three sides."""
    return solve_dirichlet_triangle(iv, n, rhs=rhs, tol=tol, ordering=ordering)
