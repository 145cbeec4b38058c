import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from brownmeet import encounter, pde
from brownmeet.errors import ConditioningError, CornerUndefined, DomainError
from brownmeet.geometry import IntervalSpec, MeetingSet, PairState

UNIT = IntervalSpec()

# mpmath oracle (Jacobi sn, 30 digits), frozen
REFERENCE = {
    (0.25, 0.5): 0.55488489970710354,
    (0.3, 0.6): 0.51643339981810208,
    (0.1, 0.5): 0.2334445294582792,
    (0.2, 0.6): 0.35241638234956677,
    (0.05, 0.99): 0.002188453649124807,
    (0.5, 0.99): 0.02360410779666181,
    (0.7, 0.9): 0.40605650220527525,
    (0.45, 0.5): 0.91629884224447,
}

# keep clear of denormals so that 3 + 7 x stays distinct from 3
unit_pairs = st.tuples(st.floats(1e-6, 1 - 1e-6), st.floats(1e-6, 1 - 1e-6)).map(sorted)


@pytest.mark.parametrize("pair", sorted(REFERENCE))
def test_frozen_reference_values(pair):
    assert encounter.meet_probability(PairState(*pair)) == pytest.approx(REFERENCE[pair], abs=1e-13)


def test_reference_table_matches_live_oracle():
    for pair, value in REFERENCE.items():
        assert oracles.probability(*pair) == pytest.approx(value, abs=1e-15)


def test_boundary_values():
    assert encounter.meet_probability(PairState(0.4, 0.4)) == 1.0
    assert encounter.meet_probability(PairState(0.0, 0.7)) == 0.0
    assert encounter.meet_probability(PairState(0.3, 1.0)) == 0.0
    t = np.linspace(0.01, 0.99, 50)
    assert np.max(np.abs(encounter.probability_values(t, t) - 1)) <= 1e-9
    legs = np.concatenate([encounter.probability_values(0 * t, t), encounter.probability_values(t, 0 * t + 1)])
    assert np.max(np.abs(legs)) <= 1e-9


@pytest.mark.parametrize("side", ["diagonal", "left", "right"])
def test_interior_limits_approach_boundary_linearly(side):
    t = np.linspace(0.05, 0.95, 19)
    gaps = []
    for delta in (1e-6, 1e-7, 1e-8):
        if side == "diagonal":
            gaps.append(1 - encounter.probability_values(t - delta / 2, t + delta / 2))
        elif side == "left":
            gaps.append(encounter.probability_values(np.full_like(t, delta), t))
        else:
            gaps.append(encounter.probability_values(t, np.full_like(t, 1 - delta)))
    # the gap to the boundary value shrinks in proportion to the distance
    assert np.allclose(gaps[0] / gaps[1], 10, rtol=1e-3)
    assert np.allclose(gaps[1] / gaps[2], 10, rtol=1e-2)
    assert np.max(np.abs(gaps[2])) <= 1e-6


def test_range_on_dense_grid():
    x = np.linspace(0, 1, 200)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    keep = (x1 <= x2) & ~((x1 == x2) & ((x1 == 0) | (x1 == 1)))
    p = encounter.probability_values(x1[keep], x2[keep])
    assert np.all((p >= 0) & (p <= 1))


def test_corners_and_domain_errors():
    for c in (0.0, 1.0):
        with pytest.raises(CornerUndefined):
            encounter.meet_probability(PairState(c, c))
    with pytest.raises(DomainError):
        encounter.meet_probability(PairState(0.6, 0.5))
    with pytest.raises(DomainError):
        encounter.meet_probability(PairState(-0.1, 0.5))
    with pytest.raises(DomainError):
        IntervalSpec(1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(unit_pairs)
def test_reflection_symmetry(pair):
    x1, x2 = pair
    assume(0 < x1 < x2 < 1)
    lhs = encounter.meet_probability(PairState(x1, x2))
    rhs = encounter.meet_probability(PairState(1 - x2, 1 - x1))
    assert lhs == pytest.approx(rhs, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(unit_pairs)
def test_scale_invariance(pair):
    x1, x2 = pair
    assume(0 < x1 < x2 < 1)
    iv = IntervalSpec(3.0, 10.0)
    a = encounter.meet_probability(PairState(x1, x2))
    b = encounter.meet_probability(PairState(3 + 7 * x1, 3 + 7 * x2), iv)
    # rounding 3 + 7x moves the point by ~eps*10/7 in unit coordinates and
    # |grad P| ~ (4/pi)/r near a vertex, r being the distance to it
    r = min(math.hypot(x1, x2), math.hypot(1 - x1, 1 - x2))
    assert a == pytest.approx(b, abs=1e-12 + 8 * np.finfo(float).eps * (10 / 7) / r)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.98), st.floats(0.001, 0.05))
def test_monotone_in_each_coordinate(x1, step):
    x2 = min(x1 + 0.3, 0.99)
    assume(x1 + step < x2)
    p = encounter.meet_probability(PairState(x1, x2))
    # moving x1 toward x2 raises P, moving x2 toward b lowers it
    assert encounter.meet_probability(PairState(x1 + step, x2)) > p
    if x2 + step < 1:
        assert encounter.meet_probability(PairState(x1, x2 + step)) < p


@pytest.mark.parametrize("probe", [(0.3, 0.6), (0.2, 0.8), (0.45, 0.55), (0.6, 0.9)])
def test_discrete_harmonicity(probe):
    # the 5-point Laplacian of the exact solution is O(h**2)
    x1, x2 = probe
    residuals = []
    for h in (0.02, 0.01, 0.005):
        pts = np.array([[x1, x2], [x1 + h, x2], [x1 - h, x2], [x1, x2 + h], [x1, x2 - h]])
        p = encounter.probability_values(pts[:, 0], pts[:, 1])
        residuals.append(abs(p[1:].sum() - 4 * p[0]) / h**2)
    assert math.log2(residuals[0] / residuals[1]) >= 1.8
    assert math.log2(residuals[1] / residuals[2]) >= 1.8


def test_asymptotic_law():
    iv = IntervalSpec(0, 100)
    for r in (0.1, 0.3, 0.5, 0.7, 0.9):
        s = PairState(r, 1.0)
        assert abs(encounter.meet_probability(s, iv) - encounter.asymptotic_probability(s, iv)) <= 1e-6
    assert encounter.asymptotic_probability(PairState(0.25, 0.5)) == pytest.approx(4 / math.pi * math.atan(0.5))


def test_asymptotic_deviation_is_quartic_in_size():
    # halving (x2 - a) / L cuts the deviation by about 2**4
    s = PairState(0.3, 1.0)
    devs = [
        abs(encounter.meet_probability(s, IntervalSpec(0, L)) - encounter.asymptotic_probability(s, IntervalSpec(0, L)))
        for L in (5.0, 10.0, 20.0)
    ]
    for big, small in zip(devs, devs[1:]):
        assert 14 <= big / small <= 18


def test_density_mass_equals_probability():
    for pair in ((0.3, 0.6), (0.25, 0.5), (0.1, 0.9), (0.45, 0.5)):
        s = PairState(*pair)
        mass = encounter.meet_probability_in_set(s, MeetingSet(((0.0, 1.0),)))
        assert mass == pytest.approx(encounter.meet_probability(s), abs=1e-6)


def test_set_probability_additivity_and_bounds():
    s = PairState(0.3, 0.6)
    p = encounter.meet_probability(s)
    left = encounter.meet_probability_in_set(s, MeetingSet(((0.0, 0.5),)))
    right = encounter.meet_probability_in_set(s, MeetingSet(((0.5, 1.0),)))
    both = encounter.meet_probability_in_set(s, MeetingSet(((0.0, 0.2), (0.5, 1.0))))
    assert left + right == pytest.approx(p, abs=1e-10)
    assert 0 < left < p and 0 < right < p
    assert both == pytest.approx(encounter.meet_probability_in_set(s, MeetingSet(((0.0, 0.2),))) + right, abs=1e-12)
    assert encounter.meet_probability_in_set(s, MeetingSet()) == 0.0
    with pytest.raises(DomainError):
        MeetingSet(((0.0, 0.5), (0.4, 0.8)))
    with pytest.raises(DomainError):
        encounter.meet_probability_in_set(s, MeetingSet(((0.5, 1.5),)))


@pytest.mark.parametrize("interval", [(0.0, 1.0), (0.0, 0.5), (0.2, 0.45), (0.6, 0.95)])
def test_density_quadrature_matches_half_plane_kernel(interval):
    s = PairState(0.3, 0.6)
    E = MeetingSet((interval,))
    assert encounter.meet_probability_in_set(s, E) == pytest.approx(
        encounter.meet_probability_in_set_kernel(s, E), abs=1e-6
    )


def test_density_routes_agree_pointwise():
    m = np.linspace(0.01, 0.99, 99)
    for pair in ((0.3, 0.6), (0.1, 0.2), (0.7, 0.95)):
        d1 = encounter.density_values(*pair, m)
        d2 = encounter.kernel_density_values(*pair, m)
        assert np.max(np.abs(d1 - d2)) <= 1e-9 * (1 + np.max(np.abs(d1)))


def test_set_probability_against_finite_differences():
    # harmonic extension of the indicator of the diagonal piece m <= 0.5
    n = 400
    tags = pde.make_tags(n)
    i = np.arange(n + 1)
    diagonal = tags == pde.NodeTag.DIAGONAL
    m = i[:, None] * (1.0 / n) + 0 * i[None, :]
    # the node sitting on the jump gets the mean of the two sides
    boundary = np.where(diagonal & (m < 0.5), 1.0, 0.0) + np.where(diagonal & (m == 0.5), 0.5, 0.0)
    g = pde.solve_dirichlet_triangle(UNIT, n, boundary=boundary).values
    for pair in ((0.3, 0.6), (0.2, 0.7), (0.45, 0.8)):
        E = MeetingSet(((0.0, 0.5),))
        assert encounter.meet_probability_in_set(PairState(*pair), E) == pytest.approx(g.interpolate(*pair), abs=1e-3)


@settings(max_examples=50, deadline=None)
@given(unit_pairs, st.floats(0.001, 0.999))
def test_density_nonnegative(pair, t):
    x1, x2 = pair
    assume(0.001 < x1 < x2 < 0.999)
    assert encounter.meeting_density(PairState(x1, x2), t) >= -1e-12


def test_meeting_density_parameterisation_and_errors():
    s = PairState(0.3, 0.6)
    # t measures from the right end: m = a + (1 - t) L
    assert encounter.meeting_density(s, 0.25) == pytest.approx(encounter.density_values(0.3, 0.6, np.array([0.75]))[0])
    for t in (0.0, 1.0):
        with pytest.raises(CornerUndefined):
            encounter.meeting_density(s, t)
    with pytest.raises(DomainError):
        encounter.meeting_density(s, 1.5)
    with pytest.raises(DomainError):
        encounter.meeting_density(PairState(0.0, 0.6), 0.5)


def test_density_on_scaled_interval():
    iv = IntervalSpec(2.0, 6.0)
    d_unit = encounter.meeting_density(PairState(0.3, 0.6), 0.4)
    d_big = encounter.meeting_density(PairState(3.2, 4.4), 0.4, iv)
    # density per unit length scales as 1/L
    assert d_big == pytest.approx(d_unit / 4, rel=1e-12)


def test_asymptotic_density_limit():
    x2 = 1.0
    iv = IntervalSpec(0, 100 * x2)
    s = PairState(0.4, x2)
    for m in np.linspace(0.05, 5.0, 25):
        t = 1 - m / iv.length
        exact = encounter.meeting_density(s, t, iv)
        approx = encounter.asymptotic_density(s, t, iv)
        assert approx == pytest.approx(exact, rel=1e-3)


def test_asymptotic_density_properties():
    # real Z (x1 = a) and real A give zero
    assert encounter.asymptotic_density(PairState(0.0, 0.5), 0.5) == 0.0
    rng = np.random.default_rng(0)
    for _ in range(50):
        x1, x2 = sorted(rng.uniform(0.01, 1, 2))
        assert encounter.asymptotic_density(PairState(x1, x2), rng.uniform(0.01, 0.99)) >= 0


def test_conditional_time_positive_and_scaling():
    s = PairState(0.3, 0.6)
    tau = encounter.conditional_mean_time(s)
    assert tau > 0
    small = encounter.conditional_mean_time(PairState(0.25, 0.5), UNIT, 1.0, 128)
    big = encounter.conditional_mean_time(PairState(0.5, 1.0), IntervalSpec(0, 2), 1.0, 128)
    assert big / small == pytest.approx(4.0, rel=1e-9)
    slow = encounter.conditional_mean_time(PairState(0.25, 0.5), UNIT, 0.25, 128)
    assert slow / small == pytest.approx(4.0, rel=1e-9)


def test_conditional_time_vanishes_linearly_at_diagonal():
    eps = np.array([0.04, 0.02, 0.01, 0.005])
    tau = np.array([encounter.conditional_mean_time(PairState(0.5 - e, 0.5 + e), UNIT, 1.0, 256) for e in eps])
    assert np.all(np.diff(tau) < 0)
    ratio = tau / eps
    assert np.all((ratio > 0.18) & (ratio < 0.21))


def test_conditional_time_near_diagonal_value():
    # FD at two grids; a fine-step Monte Carlo run agrees (2.14e-4 +- 1.2e-5)
    tau = encounter.conditional_mean_time(PairState(0.499, 0.501), UNIT, 1.0, 256)
    assert tau == pytest.approx(2.0e-4, rel=0.03)


def test_conditional_time_grid_convergence():
    s = PairState(0.3, 0.6)
    coarse, fine = (encounter.conditional_mean_time(s, UNIT, 1.0, n) for n in (128, 256))
    assert abs(fine - coarse) <= 1e-5
    assert fine == pytest.approx(0.02374, abs=2e-5)


def test_conditional_time_errors():
    with pytest.raises(ConditioningError):
        encounter.conditional_mean_time(PairState(1e-4, 0.9999))
    with pytest.raises(ConditioningError):
        # inside a vertex cell of the grid
        encounter.conditional_mean_time(PairState(0.001, 0.999))
    with pytest.raises(DomainError):
        encounter.conditional_mean_time(PairState(0.3, 0.6), D=0.0)
    with pytest.raises(DomainError):
        encounter.conditional_mean_time(PairState(0.3, 0.6), grid_n=32)
    with pytest.raises(DomainError):
        encounter.conditional_mean_time(PairState(0.3, 0.3))


def test_halfplane_interval_probability():
    # from i the interval [-1, 1] subtends half the boundary
    assert encounter.halfplane_interval_probability(1j, -1.0, 1.0) == pytest.approx(0.5)
    assert encounter.halfplane_interval_probability(1j, -1e9, 1e9) == pytest.approx(1.0, abs=1e-8)
