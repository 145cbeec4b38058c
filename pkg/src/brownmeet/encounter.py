"""Encounter probability of two Brownian particles on ``[a, b]``.

Write ``Z = (x2 - a) + i (x1 - a)`` and ``u = omega1 * Z / L`` with
``omega1 = omega / sqrt(8)``. Then the probability that the particles meet
before either leaves the interval is

    P = -(2/pi) arg wp(u)

where ``wp(u)`` always lies in the closed fourth quadrant, so the argument is
taken in ``[-pi/2, 0]`` without tracking windings. The meeting location has a
density along the diagonal obtained from the half-plane Poisson kernel pulled
back through the conformal map ``psi``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from . import conformal, elliptic, pde
from .errors import ConditioningError, CornerUndefined, DomainError
from .geometry import IntervalSpec, MeetingSet, PairState

SQRT2 = math.sqrt(2.0)
SQRT8 = math.sqrt(8.0)
#: below this probability the conditional meeting time is not computed
MIN_CONDITIONING_PROBABILITY = 1e-6


def _scaled(x1, x2, iv: IntervalSpec):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return elliptic.half_period() * ((x2 - iv.a) + 1j * (x1 - iv.a)) / iv.length


def probability_values(x1, x2, iv: IntervalSpec = IntervalSpec()) -> np.ndarray:
    """Vectorised meeting probability; no domain checks, corners give NaN."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    # P is symmetric under (x1, x2) -> (a+b-x2, a+b-x1); evaluating on the
    # half nearer a keeps the offsets from the vertex free of cancellation
    near_b = (x1 - iv.a) + (x2 - iv.a) > (iv.b - x1) + (iv.b - x2)
    d1 = np.where(near_b, iv.b - x2, x1 - iv.a)
    d2 = np.where(near_b, iv.b - x1, x2 - iv.a)
    p, _ = elliptic.wp_values(elliptic.half_period() * (d2 + 1j * d1) / iv.length)
    with np.errstate(invalid="ignore"):
        angle = np.arctan2(p.imag, p.real)
    angle = np.clip(angle, -0.5 * math.pi, 0.0)
    out = -2.0 / math.pi * angle
    # boundary data is imposed exactly rather than through roundoff
    out = np.where(x1 == x2, 1.0, out)
    out = np.where((x1 == iv.a) | (x2 == iv.b), 0.0, out)
    corner = (x1 == x2) & ((x1 == iv.a) | (x1 == iv.b))
    return np.where(corner, np.nan, out)


def _check_corner(s: PairState, iv: IntervalSpec) -> None:
    if s.x1 == s.x2 and s.x1 in (iv.a, iv.b):
        raise CornerUndefined(
            f"meeting probability has no limit at the corner x1 = x2 = {s.x1}"
        )


def meet_probability(s: PairState, iv: IntervalSpec = IntervalSpec()) -> float:
    """Probability that the two particles meet before either one escapes."""
    s.check(iv)
    _check_corner(s, iv)
    # adding 0.0 turns a -0.0 from the clipped argument into 0.0
    return float(probability_values(s.x1, s.x2, iv)) + 0.0


def asymptotic_probability(s: PairState, iv: IntervalSpec = IntervalSpec()) -> float:
    """Large-interval limit ``(4/pi) arctan((x1-a)/(x2-a))``."""
    d1, d2 = s.x1 - iv.a, s.x2 - iv.a
    if d2 <= 0 or d1 < 0 or d1 > d2:
        raise DomainError(f"need a <= x1 <= x2 with x2 > a, got ({s.x1}, {s.x2})")
    return 4.0 / math.pi * math.atan(d1 / d2)


def _hypotenuse_point(m, iv):
    # scaled lattice argument of the diagonal point x1 = x2 = m
    return elliptic.half_period() * (1 + 1j) * (np.asarray(m, dtype=float) - iv.a) / iv.length


def density_values(x1: float, x2: float, m, iv: IntervalSpec = IntervalSpec()) -> np.ndarray:
    """Meeting density per unit arc length of the diagonal, at positions ``m``.

    ``sqrt(2) * integral_a^b density(m) dm`` is the meeting probability.
    """
    u = complex(_scaled(x1, x2, iv))
    v = _hypotenuse_point(m, iv)
    pz, qz = elliptic.wp_values(np.array([u]))
    pz, qz = pz[0], qz[0]
    pa, qa = elliptic.wp_values(v)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.abs(pa / qa) ** 3
        bracket = (qz * qa) ** 2 / (pz * qa**2 - qz**2 * pa)
    prefactor = elliptic.omega_constant() * SQRT8 / (math.pi * iv.length)
    # Im(bracket) = Im 1/(psi(Z) - psi(A)) is negative; the density is its negation
    out = -prefactor * ratio * bracket.imag
    # at m = a the factor |wp/wp'|^3 vanishes (wp has a pole there)
    return np.where(np.isinf(pa), 0.0, out)


def meeting_density(s: PairState, t: float, iv: IntervalSpec = IntervalSpec()) -> float:
    """Density of the meeting position ``m = a + (1 - t) L`` on the diagonal."""
    s.check(iv, strict=True)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if t in (0.0, 1.0):
        raise CornerUndefined("density is not defined at the ends of the diagonal")
    m = iv.a + (1.0 - t) * iv.length
    return float(density_values(s.x1, s.x2, np.array([m]), iv)[0])


def kernel_density_values(x1: float, x2: float, m, iv: IntervalSpec = IntervalSpec()) -> np.ndarray:
    """Same density as :func:`density_values`, assembled as ``D(psi Z, psi A) |psi'(A)|``.

    ``D(z, alpha) = Im(z) / (pi |z - alpha|**2)`` is the half-plane Poisson
    kernel. This route goes through :mod:`conformal` rather than the expanded
    Weierstrass expression and serves as a cross-check.
    """
    w = elliptic.omega_constant()
    Z = w * complex(iv.relative(x2), iv.relative(x1))
    A = w * (1 + 1j) * (np.asarray(m, dtype=float) - iv.a) / iv.length
    z = complex(conformal.psi_values(Z))
    alpha = conformal.psi_values(A).real
    kernel = z.imag / (math.pi * np.abs(z - alpha) ** 2)
    return kernel * np.abs(conformal.dpsi_values(A)) * w / iv.length


def halfplane_interval_probability(z: complex, alpha: float, beta: float) -> float:
    """Harmonic measure of ``[alpha, beta]`` seen from ``z`` in the upper half-plane."""
    # (1/pi) Im log((z - beta)/(z - alpha)) with both arguments in [0, pi]
    return (math.atan2(z.imag, z.real - beta) - math.atan2(z.imag, z.real - alpha)) / math.pi


def meet_probability_in_set(s: PairState, E: MeetingSet, iv: IntervalSpec = IntervalSpec()) -> float:
    """Probability of meeting at a position inside ``E`` (density quadrature)."""
    s.check(iv, strict=True)
    E.check(iv)
    total = 0.0
    for lo, hi in E.intervals:
        if hi <= lo:
            continue
        val, _ = integrate.quad(
            lambda m: float(density_values(s.x1, s.x2, np.array([m]), iv)[0]),
            lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200,
        )
        total += SQRT2 * val
    return total


def meet_probability_in_set_kernel(s: PairState, E: MeetingSet, iv: IntervalSpec = IntervalSpec()) -> float:
    """Same quantity as :func:`meet_probability_in_set` via the half-plane log-kernel."""
    s.check(iv, strict=True)
    E.check(iv)
    w = elliptic.omega_constant()
    z = conformal.map_psi(w * s.triangle_point(iv))
    total = 0.0
    for lo, hi in E.intervals:
        # psi reverses orientation along the diagonal: m = b -> 0, m = a -> 1
        ends = conformal.psi_values(w * (1 + 1j) * (np.array([lo, hi]) - iv.a) / iv.length).real
        total += halfplane_interval_probability(z, ends[1], ends[0])
    return total


def asymptotic_density(s: PairState, t: float, iv: IntervalSpec = IntervalSpec()) -> float:
    """Large-interval limit of :func:`meeting_density`.

    With ``Z = (x2-a) + i(x1-a)`` and ``A = (1+i)(m-a)`` this is
    ``-(4|A|^3/pi) Im(1/(Z^4 - A^4))``; the map ``Z -> Z^4`` opens the
    quarter-right-angle wedge at ``a`` onto the half-plane.
    """
    Z = complex(s.x2 - iv.a, s.x1 - iv.a)
    A = (1 + 1j) * (1.0 - t) * iv.length
    denom = Z**4 - A**4
    if denom == 0:
        raise CornerUndefined("Z coincides with the meeting point")
    return -4.0 * abs(A) ** 3 / math.pi * (1.0 / denom).imag


def _poisson_for_time(iv: IntervalSpec, D: float, n: int, tol: float):
    h = iv.length / n
    x = iv.a + h * np.arange(n + 1)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    with np.errstate(invalid="ignore"):
        rhs = -np.nan_to_num(probability_values(x1, x2, iv)) / D
    return pde.solve_poisson_triangle(iv, n, rhs, tol=tol)


def conditional_mean_time(
    s: PairState, iv: IntervalSpec = IntervalSpec(), D: float = 1.0, grid_n: int = 256, tol: float | None = None
) -> float:
    """Mean meeting time conditioned on meeting before escape.

    Solves ``D Lap w = -P`` with ``w = 0`` on the boundary by finite
    differences and returns ``w / P`` at the starting point.
    """
    if D <= 0:
        raise DomainError("diffusion constant must be positive")
    if grid_n < 64:
        raise DomainError("grid_n must be at least 64")
    s.check(iv, strict=True)
    p = meet_probability(s, iv)
    if p < MIN_CONDITIONING_PROBABILITY:
        raise ConditioningError(f"meeting probability {p:.3e} is too small to condition on")
    if tol is None:
        # residual target relative to the forcing scale 1/D
        tol = 1e-7 / D
    grid = _poisson_for_time(iv, D, grid_n, tol).values
    w = grid.interpolate(s.x1, s.x2)
    if w <= 0.0:
        # every vertex of the enclosing cell is a boundary node
        raise ConditioningError(
            f"start point is within one cell of a corner at grid_n={grid_n}; refine the grid"
        )
    return w / p
