"""Conformal maps between the closed upper half-plane and the triangle T.

T has vertices ``0``, ``omega`` and ``(1+1j)*omega``. The forward map
``F(zeta) = integral_1^zeta dz / f(z)`` is a Schwarz-Christoffel integral
evaluated by quadrature; its inverse ``psi`` is explicit in terms of the
lemniscatic Weierstrass function:

    psi(Z) = 4 wp(Z/sqrt8)**2 / (4 wp(Z/sqrt8)**2 - 1)

F sends ``1, inf, 0`` to ``0, omega, (1+1j)*omega``; the segment ``[0, 1]``
lands on the hypotenuse, ``[1, inf)`` on the bottom leg and ``(-inf, 0]`` on
the vertical leg ``Re Z = omega``.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import integrate

from . import elliptic
from .errors import BranchPointError, DegenerateDerivative, PoleAtVertex, QuadratureError

SQRT8 = math.sqrt(8.0)
TRIANGLE_TOL = 1e-12
HALF_PLANE_TOL = 1e-12
#: |psi| beyond this is reported as the vertex omega
PSI_POLE_MAGNITUDE = 1e12
#: straight quadrature paths must keep this distance from the branch point 0
_PATH_CLEARANCE = 0.05
_QUAD_TOL = 1e-12
_MAP_F_ABS_ERROR = 1e-9


def in_triangle(Z: complex, tol: float = TRIANGLE_TOL) -> bool:
    """Membership test for the closed triangle ``0 <= Im Z <= Re Z <= omega``."""
    w = elliptic.omega_constant()
    return -tol <= Z.imag <= Z.real + tol and Z.real <= w + tol


def _angles(z):
    # theta in [0, pi]; points a hair below the axis are folded onto it
    z = np.asarray(z, dtype=complex)
    im = np.where(z.imag > 0, z.imag, 0.0)
    t0 = np.arctan2(im, z.real)
    t1 = np.arctan2(im, z.real - 1.0)
    return t0, t1


def _f_values(z):
    z = np.asarray(z, dtype=complex)
    t0, t1 = _angles(z)
    r = np.abs(z) * np.abs(z - 1.0)
    return r**0.75 * np.exp(0.75j * (t0 + t1))


def branch_f(z: complex) -> complex:
    """Branch of ``(z(z-1))**(3/4)`` on the closed upper half-plane.

    Uses ``(r0 r1)**(3/4) * exp(3i(theta0 + theta1)/4)`` with both angles in
    ``[0, pi]``, which extends continuously to the real axis.
    """
    z = complex(z)
    if z.imag < -HALF_PLANE_TOL:
        raise ValueError(f"{z!r} is below the real axis")
    if z == 0 or z == 1:
        raise BranchPointError(f"f is not defined at the branch point {z!r}")
    return complex(_f_values(z))


def phi(z: complex) -> complex:
    """``sqrt(z / (4(z-1)))`` with the root chosen in the closed fourth quadrant."""
    z = complex(z)
    if z.imag < -HALF_PLANE_TOL:
        raise ValueError(f"{z!r} is below the real axis")
    if z == 1:
        raise BranchPointError("phi has a pole at z = 1")
    if cmath.isinf(z):
        return 0.5 + 0j
    t0, t1 = _angles(z)
    return 0.5 * math.sqrt(abs(z) / abs(z - 1.0)) * cmath.exp(0.5j * float(t0 - t1))


def _f_without(z, b, theta_b):
    # f(z) / |z - b|**(3/4) for a branch point b in {0, 1}, with arg(z - b)
    # supplied by the caller because z - b underflows next to b
    z = np.asarray(z, dtype=complex)
    other = 1.0 - b
    t0, t1 = _angles(z)
    theta_other = t1 if other == 1.0 else t0
    return np.abs(z - other) ** 0.75 * np.exp(0.75j * (theta_b + theta_other))


def _half_plane_arg(d: complex) -> float:
    return math.atan2(max(d.imag, 0.0), d.real)


def _quad(fn, lo, hi):
    value, err = integrate.quad(fn, lo, hi, complex_func=True, epsabs=_QUAD_TOL,
                                epsrel=_QUAD_TOL, limit=200)
    return value, abs(err.real) + abs(err.imag)


def _segment(z0: complex, z1: complex, singular_start: bool, singular_end: bool = False) -> tuple[complex, float]:
    """Integrate ``dz / f(z)`` along the straight segment ``z0 -> z1``.

    Endpoints sitting on a branch point get the substitution ``s = u**4``
    (or ``1 - s = v**4``); the factor ``|z - b|**(3/4)`` then cancels
    against the Jacobian and the integrand is smooth.
    """
    dz = z1 - z0
    scale = abs(dz) ** 0.25
    theta_start = _half_plane_arg(dz)
    theta_end = _half_plane_arg(-dz)

    def g(s):
        return dz / _f_values(z0 + dz * s)

    def g_start(u):
        return 4.0 * dz / (scale**3 * _f_without(z0 + dz * u**4, z0.real, theta_start))

    def g_end(v):
        return 4.0 * dz / (scale**3 * _f_without(z1 - dz * v**4, z1.real, theta_end))

    value, err = 0j, 0.0
    lo, hi = 0.0, 1.0
    if singular_start:
        lo = 0.5 if singular_end else 1.0
        v, e = _quad(g_start, 0.0, lo**0.25)
        value, err = value + v, err + e
    if singular_end:
        hi = lo
        v, e = _quad(g_end, 0.0, (1.0 - hi) ** 0.25)
        value, err = value + v, err + e
    if hi > lo:
        v, e = _quad(g, lo, hi)
        value, err = value + v, err + e
    return value, err


def _distance_to_segment(p: complex, z0: complex, z1: complex) -> float:
    d = z1 - z0
    if d == 0:
        return abs(p - z0)
    s = ((p - z0) * d.conjugate()).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(p - (z0 + s * d))


def map_F(zeta: complex) -> complex:
    """Schwarz-Christoffel map ``F(zeta) = integral_1^zeta dz / f(z)`` onto T."""
    zeta = complex(zeta)
    if zeta.imag < -HALF_PLANE_TOL:
        raise ValueError(f"{zeta!r} is below the real axis")
    if cmath.isinf(zeta):
        return complex(elliptic.omega_constant(), 0.0)
    zeta = complex(zeta.real, max(zeta.imag, 0.0))
    if zeta == 1:
        return 0j
    if zeta == 0:
        return (1 + 1j) * elliptic.omega_constant()
    if abs(zeta) < _PATH_CLEARANCE:
        # start from the known image of 0 instead of threading past it
        value, err = _segment(0j, zeta, singular_start=True)
        value += (1 + 1j) * elliptic.omega_constant()
    elif _distance_to_segment(0j, 1 + 0j, zeta) > _PATH_CLEARANCE:
        value, err = _segment(1 + 0j, zeta, singular_start=True)
    else:
        v1, e1 = _segment(1 + 0j, 1j, singular_start=True)
        v2, e2 = _segment(1j, zeta, singular_start=False)
        value, err = v1 + v2, e1 + e2
    if err > _MAP_F_ABS_ERROR:
        raise QuadratureError(f"F({zeta!r}) did not converge", err)
    return value


def psi_values(Z) -> np.ndarray:
    """Vectorised inverse map; the vertex ``omega`` yields ``inf``."""
    Z = np.asarray(Z, dtype=complex)
    p, _ = elliptic.wp_values(Z / SQRT8)
    with np.errstate(invalid="ignore", divide="ignore"):
        four_p2 = 4.0 * p * p
        out = four_p2 / (four_p2 - 1.0)
    out = np.where(np.isinf(p), 1.0 + 0j, out)
    return np.where(np.abs(out) > PSI_POLE_MAGNITUDE, np.inf, out)


def map_psi(Z: complex) -> complex:
    """Inverse of :func:`map_F` on the closed triangle."""
    Z = complex(Z)
    if not in_triangle(Z):
        raise ValueError(f"{Z!r} is outside the triangle")
    out = complex(psi_values(Z))
    if cmath.isinf(out):
        raise PoleAtVertex(f"psi is infinite at the vertex omega (Z = {Z!r})")
    return out


def dpsi_values(Z) -> np.ndarray:
    """Vectorised ``d psi / dZ = -sqrt8 (wp / wp')**3`` at ``Z / sqrt8``."""
    Z = np.asarray(Z, dtype=complex)
    p, q = elliptic.wp_values(Z / SQRT8)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = -SQRT8 * (p / q) ** 3
    # at Z = 0 the ratio wp/wp' tends to 0
    return np.where(np.isinf(p), 0j, out)


def dpsi_dZ(Z: complex) -> complex:
    Z = complex(Z)
    p, q = elliptic.wp_values(np.array([Z / SQRT8]))
    if np.isinf(p[0]):
        return 0j
    if abs(q[0]) < 1e-12:
        raise DegenerateDerivative(f"wp' vanishes at {Z / SQRT8!r}")
    return complex(-SQRT8 * (p[0] / q[0]) ** 3)
