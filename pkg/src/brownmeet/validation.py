"""Invariant suite behind ``brownmeet validate``.

Each check reports a scalar and a tolerance. Most are errors that must not
exceed the tolerance; convergence orders are lower bounds. A global override
(``tol_override``) replaces the tolerance of every error check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from . import conformal, elliptic, encounter, mc, pde
from .geometry import IntervalSpec, PairState

PAPER_OMEGA = 5.244115106
#: FD comparisons skip nodes closer than this many cells to a vertex
FD_EXCLUSION_CELLS = 4


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    lower_bound: bool = False

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        if self.lower_bound:
            return self.value >= self.tolerance
        return self.value <= self.tolerance


def cell_samples(count: int, seed: int = 0, margin: float = 0.05) -> np.ndarray:
    """Quasi-random points of the fundamental cell, away from the lattice."""
    w1 = elliptic.half_period()
    pts = qmc.Halton(d=2, seed=seed).random(4 * count)
    z = 2.0 * w1 * ((pts[:, 0] - 0.5) + 1j * (pts[:, 1] - 0.5))
    two_w1 = 2.0 * w1
    r = z - two_w1 * (np.round(z.real / two_w1) + 1j * np.round(z.imag / two_w1))
    return z[np.abs(r) > margin][:count]


def wp_ode_residual(z: np.ndarray) -> float:
    p, q = elliptic.wp_values(z)
    return float(np.max(np.abs(q * q - 4 * p**3 + elliptic.G2 * p) / (1 + np.abs(p) ** 3)))


def wp_periodicity_error(z: np.ndarray) -> float:
    two_w1 = 2.0 * elliptic.half_period()
    p, _ = elliptic.wp_values(z)
    worst = 0.0
    for shift in (two_w1, 1j * two_w1, two_w1 * (1 - 2j)):
        ps, _ = elliptic.wp_values(z + shift)
        worst = max(worst, float(np.max(np.abs(ps - p) / (1 + np.abs(p)))))
    return worst


def wp_parity_error(z: np.ndarray) -> float:
    p, q = elliptic.wp_values(z)
    pm, qm = elliptic.wp_values(-z)
    return float(max(np.max(np.abs(pm - p) / (1 + np.abs(p))), np.max(np.abs(qm + q) / (1 + np.abs(q)))))


def wp_inversion_error(count: int = 25) -> float:
    w1 = elliptic.half_period()
    xi = np.linspace(0.05, 1.0, count) * w1
    worst = 0.0
    for x in xi:
        value = elliptic.wp(complex(x)).value.real
        worst = max(worst, abs(elliptic.invert_real(value) - x))
    return worst


def roundtrip_error(k: int = 10) -> float:
    worst = 0.0
    for re in np.linspace(-1.8, 2.7, k):
        for im in np.linspace(0.1, 2.0, k):
            zeta = complex(re, im)
            back = conformal.map_psi(conformal.map_F(zeta))
            worst = max(worst, abs(back - zeta))
    return worst


def fd_error(grid: pde.TriangleGrid, cells: float = FD_EXCLUSION_CELLS) -> float:
    """Max |grid - P| over interior nodes at least ``cells * h`` from every vertex."""
    iv = IntervalSpec(grid.a, grid.b)
    mask = grid.corner_distance_mask(cells)
    x1, x2 = grid.coordinates()
    exact = encounter.probability_values(x1[mask], x2[mask], iv)
    return float(np.max(np.abs(grid.values[mask] - exact)))


def density_mass_error(s: PairState, iv: IntervalSpec = IntervalSpec()) -> float:
    from .geometry import MeetingSet

    mass = encounter.meet_probability_in_set(s, MeetingSet(((iv.a, iv.b),)), iv)
    return abs(mass - encounter.meet_probability(s, iv))


def asymptotic_error(ratios=(0.1, 0.3, 0.5, 0.7, 0.9)) -> float:
    iv = IntervalSpec(0.0, 100.0)
    worst = 0.0
    for r in ratios:
        s = PairState(r, 1.0)
        worst = max(worst, abs(encounter.meet_probability(s, iv) - encounter.asymptotic_probability(s, iv)))
    return worst


def meantime_scaling_error(grid_n: int = 64) -> float:
    s = PairState(0.3, 0.6)
    base = encounter.conditional_mean_time(s, IntervalSpec(), 1.0, grid_n, tol=1e-10)
    big = encounter.conditional_mean_time(PairState(0.9, 1.8), IntervalSpec(0.0, 3.0), 2.0, grid_n, tol=1e-10 / 2.0)
    return abs(big / base - 4.5) / 4.5


def mc_zscore(s: PairState, cfg: mc.SimConfig, iv: IntervalSpec = IntervalSpec()) -> float:
    r = mc.estimate(s, iv, cfg)
    return abs(r.p_hat - encounter.meet_probability(s, iv)) / r.std_error


def run(level: str = "fast", tol_override: float | None = None):
    """Run the suite; returns ``(results, grid)`` with the finest Laplace grid."""
    if level not in ("fast", "full"):
        raise ValueError(f"unknown level {level!r}")
    results: list[CheckResult] = []

    def add(name, value, tol, lower_bound=False):
        if tol_override is not None and not lower_bound:
            tol = tol_override
        results.append(CheckResult(name, float(value), tol, lower_bound))

    w = elliptic.omega_constant()
    add("omega_vs_paper", abs(w - PAPER_OMEGA), 1e-8)
    beta = math.gamma(0.5) * math.gamma(0.25) / math.gamma(0.75)
    add("omega_vs_beta", abs(w - beta), 1e-9)

    z = cell_samples(100)
    add("wp_ode_residual", wp_ode_residual(z), 1e-9)
    add("wp_periodicity", wp_periodicity_error(z), 1e-10)
    add("wp_parity", wp_parity_error(z), 1e-10)
    add("wp_quadrature_inversion", wp_inversion_error(), 1e-8)
    add("psi_F_roundtrip", roundtrip_error(), 1e-7)

    iv = IntervalSpec()
    sizes = (100, 200) if level == "fast" else (200, 400)
    errors = []
    grid = None
    for n in sizes:
        grid = pde.solve_laplace_triangle(iv, n).values
        errors.append(fd_error(grid))
    add(f"fd_vs_closed_form_n{sizes[1]}", errors[1], 1e-5)
    add("fd_observed_order", math.log2(errors[0] / errors[1]), 1.8, lower_bound=True)

    for s in (PairState(0.3, 0.6), PairState(0.25, 0.5)):
        add(f"density_mass_{s.x1}_{s.x2}", density_mass_error(s), 1e-6)
    add("asymptotic_law", asymptotic_error(), 1e-6)
    add("meantime_scaling", meantime_scaling_error(), 1e-9)

    if level == "full":
        cfg = mc.SimConfig(n_realizations=2000, seed=2024)
        for s in (PairState(0.25, 0.5), PairState(0.5, 0.99), PairState(0.1, 0.5)):
            add(f"mc_3sigma_{s.x1}_{s.x2}", mc_zscore(s, cfg), 3.0)
        s = PairState(0.25, 0.5)
        r1 = mc.estimate(s, iv, mc.SimConfig(diffusion=1.0, n_realizations=2000, seed=5))
        r2 = mc.estimate(s, iv, mc.SimConfig(diffusion=3.0, n_realizations=2000, seed=6))
        add("mc_D_independence", abs(r1.p_hat - r2.p_hat) / math.hypot(r1.std_error, r2.std_error), 3.0)
    return results, grid
