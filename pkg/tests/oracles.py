"""Independent reference implementations used by the tests.

Everything here goes through mpmath, not through the package: the
lemniscatic wp comes from the Jacobi ``sn`` function with parameter 1/2,
using the roots e1 = 1/2, e2 = 0, e3 = -1/2 of ``4p^3 - p``.
"""

import mpmath as mp

mp.mp.dps = 30
HALF = mp.mpf(1) / 2


def wp(z):
    return -HALF + 1 / mp.ellipfun("sn", mp.mpc(z), m=HALF) ** 2


def half_period():
    return mp.ellipk(HALF)


def probability(x1, x2, a=0.0, b=1.0):
    u = half_period() * ((x2 - a) + 1j * (x1 - a)) / (b - a)
    return float(-2 / mp.pi * mp.arg(wp(u)))


def _g(p):
    # 1/sqrt(4p^3 - p) with the branch continuous from +inf
    return 1 / (2 * p**1.5 * mp.sqrt(1 - 1 / (4 * p * p)))


def tail_integral(p0):
    """``sqrt(8) * integral_{p0}^{inf} dp / sqrt(4p^3 - p)`` for ``p0`` in the closed fourth quadrant.

    The path drops to ``p0 - i`` first so it never passes the cut ``[-1/2, 1/2]``.
    """
    p0 = mp.mpc(p0)
    q = p0 - 1j
    head = mp.quad(_g, [p0, q])
    tail = mp.quad(lambda t: _g(q + t / (1 - t)) / (1 - t) ** 2, [0, HALF, 1])
    return complex(mp.sqrt(8) * (head + tail))
