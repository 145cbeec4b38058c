"""Lemniscatic Weierstrass function with invariants g2 = 1, g3 = 0.

The period lattice is square, generated by ``2*omega1`` and ``2j*omega1`` with
real half-period ``omega1 = omega / sqrt(8)``, where ``omega`` is the constant
returned by :func:`omega_constant`.

Evaluation reduces the argument into the fundamental cell centred at the
origin, halves it until it lies inside a disk of radius 0.9, sums the Laurent
series there and climbs back with the duplication formula. Near the cell
corners ``(+-1 +- 1j) * omega1``, where wp has double zeros, the duplication
ladder loses relative accuracy; there the shift by the half-period
``omega3 = (1+1j) * omega1`` is used instead:

    wp(z + omega3) = -1 / (4 wp(z)),    wp'(z + omega3) = wp'(z) / (4 wp(z)**2)
 Both the scalar
helpers (:func:`wp`, :func:`wp_prime`) and the array kernel
(:func:`wp_values`) share the same code path.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import PoleProximity

G2 = 1.0
G3 = 0.0

#: arguments closer than this to a lattice point are reported as poles
POLE_TOL = 1e-8
#: Laurent series is summed only for |z| below this radius
SERIES_RADIUS = 0.9
_SERIES_CUTOFF = 1e-18
#: within this distance of a zero of wp the shifted series is used instead
ZERO_RADIUS = 0.5


@dataclass(frozen=True)
class LatticeReduction:
    """Bookkeeping of how an argument was brought into the series disk.

    ``reduced`` is the original argument minus
    ``shifts_real * 2*omega1 + shifts_imag * 2j*omega1``, halved ``doublings``
    times.
    """

    reduced: complex
    shifts_real: int
    shifts_imag: int
    doublings: int

    def reconstruct(self) -> complex:
        two_w1 = 2.0 * half_period()
        return self.reduced * 2.0**self.doublings + two_w1 * complex(
            self.shifts_real, self.shifts_imag
        )


@dataclass(frozen=True)
class WpValue:
    value: complex
    is_pole: bool = False


@functools.cache
def omega_constant() -> float:
    """Return ``omega = integral_1^inf dx / (x(x-1))**(3/4)``.

    The integral is split at ``x = 2``. On ``(1, 2]`` the substitution
    ``x = 1 + u**4`` removes the endpoint singularity; on ``[2, inf)`` the
    substitution ``x = 1/s**2`` maps the tail onto a finite interval with a
    smooth integrand. Each piece is integrated with adaptive Gauss-Kronrod.
    """
    head, _ = integrate.quad(
        lambda u: 4.0 * (1.0 + u**4) ** -0.75, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13
    )
    tail, _ = integrate.quad(
        lambda s: 2.0 * (1.0 - s * s) ** -0.75,
        0.0,
        math.sqrt(0.5),
        epsabs=1e-13,
        epsrel=1e-13,
    )
    return head + tail


def half_period() -> float:
    """Real half-period ``omega1 = omega / sqrt(8)`` of the lattice."""
    return omega_constant() / math.sqrt(8.0)


@functools.cache
def _laurent_coefficients() -> tuple[float, ...]:
    # c[k] multiplies z**(2k-2); the recurrence holds for k >= 4
    c = {2: G2 / 20.0, 3: G3 / 28.0}
    k = 3
    while True:
        k += 1
        c[k] = 3.0 / ((2 * k + 1) * (k - 3)) * sum(c[m] * c[k - m] for m in range(2, k - 1))
        # odd-index coefficients vanish when g3 = 0, so test two in a row
        tail = max(abs(c[k]), abs(c[k - 1])) * SERIES_RADIUS ** (2 * k - 4)
        if tail < _SERIES_CUTOFF:
            break
    return tuple(c[j] for j in range(2, k + 1))


def reduce_argument(z: complex) -> LatticeReduction:
    """Reduce ``z`` modulo the period lattice and halve it into the series disk."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"argument must be finite, got {z!r}")
    two_w1 = 2.0 * half_period()
    m = round(z.real / two_w1)
    n = round(z.imag / two_w1)
    r = z - two_w1 * complex(m, n)
    if abs(r) < POLE_TOL:
        raise PoleProximity(f"{z!r} is within {POLE_TOL:g} of the lattice point {m}+{n}i")
    d = 0
    while abs(r) > SERIES_RADIUS:
        r *= 0.5
        d += 1
    return LatticeReduction(r, int(m), int(n), d)


def _series(r):
    coeffs = _laurent_coefficients()
    r2 = r * r
    # Horner in r**2 for sum_k c_k r**(2k-2) and its derivative
    s = np.zeros_like(r)
    ds = np.zeros_like(r)
    for idx in range(len(coeffs) - 1, -1, -1):
        k = idx + 2
        s = s * r2 + coeffs[idx]
        ds = ds * r2 + (2 * k - 2) * coeffs[idx]
    p = 1.0 / r2 + s * r2
    dp = -2.0 / (r2 * r) + ds * r
    return p, dp


def wp_values(z) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(wp(z), wp'(z))`` for an array of complex arguments.

    Lattice points (within :data:`POLE_TOL`) yield ``inf`` in both outputs.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    two_w1 = 2.0 * half_period()
    m = np.round(z.real / two_w1)
    n = np.round(z.imag / two_w1)
    r = z - two_w1 * (m + 1j * n)
    corner = 0.5 * two_w1 * (np.where(r.real >= 0, 1.0, -1.0) + 1j * np.where(r.imag >= 0, 1.0, -1.0))
    near_zero = np.abs(r - corner) < ZERO_RADIUS
    r = np.where(near_zero, r - corner, r)
    mod = np.abs(r)
    pole = mod < POLE_TOL
    r = np.where(pole, 0.5, r)
    mod = np.where(pole, 0.5, mod)
    d = np.maximum(np.ceil(np.log2(mod / SERIES_RADIUS)), 0).astype(int)
    r = r / 2.0**d
    p, dp = _series(r)
    for remaining in range(int(d.max(initial=0)), 0, -1):
        sel = d >= remaining
        ps, qs = p[sel], dp[sel]
        lam = (6.0 * ps * ps - 0.5 * G2) / qs
        p2 = 0.25 * lam * lam - 2.0 * ps
        q2 = -(qs + lam * (p2 - ps))
        p[sel], dp[sel] = p2, q2
    # every cell corner is congruent to omega3 modulo the lattice
    ps, qs = p[near_zero], dp[near_zero]
    p[near_zero] = -0.25 / ps
    dp[near_zero] = qs / (4.0 * ps * ps)
    exact_zero = near_zero & pole
    p[pole] = np.inf
    dp[pole] = np.inf
    p[exact_zero] = 0.0
    dp[exact_zero] = 0.0
    return p.reshape(shape), dp.reshape(shape)


def wp(z: complex) -> WpValue:
    """Weierstrass ``wp(z; 1, 0)``; lattice points come back with ``is_pole``."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"argument must be finite, got {z!r}")
    p, _ = wp_values(np.array([z]))
    if np.isinf(p[0]):
        return WpValue(complex(math.inf, 0.0), True)
    return WpValue(complex(p[0]))


def wp_prime(z: complex) -> WpValue:
    """Derivative of :func:`wp`. Raises :class:`PoleProximity` on the lattice."""
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"argument must be finite, got {z!r}")
    _, q = wp_values(np.array([z]))
    if np.isinf(q[0]):
        raise PoleProximity(f"{z!r} is a lattice point")
    return WpValue(complex(q[0]))


def invert_real(value: float) -> float:
    """Real ``xi`` with ``wp(xi) = value`` for ``value >= 1/2``.

    Computed directly as ``integral_value^inf dp / sqrt(4p^3 - p)``; this is an
    independent route to ``wp`` on the real half-period segment.
    """
    if value < 0.5:
        raise ValueError("inversion on the real segment requires value >= 1/2")
    # p = value + u**2 near the lower end (regular there since value > e1) and
    # p = 1/t**2 on the tail; split where the two are comparable.
    split = max(2.0 * value, 2.0)

    def lower(u):
        p = value + u * u
        return 2.0 * u / math.sqrt(4.0 * p**3 - p)

    def upper(t):
        # dp = -2 dt / t**3, sqrt(4/t**6 - 1/t**2) = sqrt(4 - t**4) / t**3
        return 2.0 / math.sqrt(4.0 - t**4)

    a, _ = integrate.quad(lower, 0.0, math.sqrt(split - value), epsabs=1e-14, epsrel=1e-13)
    b, _ = integrate.quad(upper, 0.0, 1.0 / math.sqrt(split), epsabs=1e-14, epsrel=1e-13)
    return a + b
