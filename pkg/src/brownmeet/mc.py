"""Monte Carlo oracle for the two-particle encounter problem.

Each realization advances both particles with independent Gaussian increments
of variance ``2*D*dt`` and stops at the first of three events: the particles
meet, ``X1`` leaves through ``a``, or ``X2`` leaves through ``b``. Within a
step each event is detected either by a sign change at the step end or, with
bridge corrections on, by sampling the Brownian-bridge crossing probability

    exp(-2 d0 d1 / (s2 dt))

where ``d0, d1`` are the distances to the barrier at the two ends of the step
and ``s2`` the variance rate (``2D`` for a single particle, ``4D`` for the
gap ``X2 - X1``). When several events fire in the same step the one with the
largest crossing probability wins; exact ties go to the event whose linear
interpolation crosses first.

Random streams: realization ``k`` of a run seeded with ``seed`` uses numba's
MT19937 seeded with a 32-bit word drawn from
``SeedSequence(seed, spawn_key=(*prefix, k))``. Normals come from numba's
implementation of NumPy's legacy polar (Marsaglia) method. Outcomes therefore
depend only on ``(seed, prefix, k)`` and not on threading or batch layout.
"""

from __future__ import annotations

import enum
import logging
import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numba
import numpy as np

from .errors import DomainError, Truncated
from .geometry import IntervalSpec, PairState

log = logging.getLogger(__name__)

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"

MET, ESCAPED, TRUNCATED = 0, 1, 2
#: fraction of truncated realizations that makes an estimate fail
MAX_TRUNCATED_FRACTION = 0.01


class Event(enum.Enum):
    MET = "met"
    ESCAPED = "escaped"


@dataclass(frozen=True)
class SimConfig:
    diffusion: float = 1.0
    dt: float | None = None
    n_realizations: int = 2000
    seed: int = 0
    bridge_corrections: bool = True
    max_steps: int | None = None
    threads: int | None = None

    def __post_init__(self):
        if self.diffusion <= 0:
            raise DomainError("diffusion must be positive")
        if self.dt is not None and self.dt <= 0:
            raise DomainError("dt must be positive")
        if self.n_realizations < 1:
            raise DomainError("n_realizations must be at least 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise DomainError("max_steps must be at least 1")

    def time_step(self, iv: IntervalSpec) -> float:
        if self.dt is not None:
            return self.dt
        return 1e-5 * iv.length**2 / (2.0 * self.diffusion)

    def step_cap(self, iv: IntervalSpec) -> int:
        if self.max_steps is not None:
            return self.max_steps
        # survival past L^2/D is below exp(-5 pi^2) for the triangle
        return int(math.ceil(iv.length**2 / (self.diffusion * self.time_step(iv))))


@dataclass(frozen=True)
class RealizationOutcome:
    event: Event
    meeting_position: float | None
    event_time: float
    steps: int


@dataclass
class EstimateResult:
    p_hat: float
    std_error: float
    n: int
    met: int
    escaped: int
    truncated: int
    sample_variance: float
    histogram: np.ndarray | None = None
    bin_edges: np.ndarray | None = None
    conditional_mean_time: float | None = None
    conditional_time_se: float | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "p_hat": self.p_hat,
            "std_error": self.std_error,
            "sample_variance": self.sample_variance,
            "n": self.n,
            "met": self.met,
            "escaped": self.escaped,
            "truncated": self.truncated,
        }
        if self.histogram is not None:
            out["histogram"] = {"counts": self.histogram.tolist(), "edges": self.bin_edges.tolist()}
        if self.conditional_mean_time is not None:
            out["conditional_mean_time"] = self.conditional_mean_time
            out["conditional_time_se"] = self.conditional_time_se
        return out


@numba.njit(cache=True)
def _crossing(d0, d1, s2dt):
    # probability that a bridge from d0 > 0 to d1 touched 0
    if d1 <= 0.0:
        return 1.0
    x = 2.0 * d0 * d1 / s2dt
    if x > 40.0:
        return 0.0
    return math.exp(-x)


@numba.njit(cache=True)
def _first_fraction(d0, d1):
    if d1 >= d0:
        return 1.0
    return d0 / (d0 - d1)


@numba.njit(cache=True)
def _simulate(x1, x2, a, b, D, dt, max_steps, bridge, seed):
    """Return (event, position, time, steps) for one realization."""
    if x1 <= a or x2 >= b:
        return ESCAPED, math.nan, 0.0, 0
    if x2 <= x1:
        return MET, x1, 0.0, 0
    np.random.seed(seed)
    sd = math.sqrt(2.0 * D * dt)
    one = 2.0 * D * dt
    gap = 4.0 * D * dt
    for step in range(1, max_steps + 1):
        y1 = x1 + sd * np.random.standard_normal()
        y2 = x2 + sd * np.random.standard_normal()
        d0, d1 = x2 - x1, y2 - y1
        l0, l1 = x1 - a, y1 - a
        r0, r1 = b - x2, b - y2
        if bridge:
            pm = _crossing(d0, d1, gap)
            pl = _crossing(l0, l1, one)
            pr = _crossing(r0, r1, one)
            fm = pm >= 1.0 or (pm > 0.0 and np.random.random() < pm)
            fl = pl >= 1.0 or (pl > 0.0 and np.random.random() < pl)
            fr = pr >= 1.0 or (pr > 0.0 and np.random.random() < pr)
        else:
            pm = 1.0 if d1 <= 0.0 else 0.0
            pl = 1.0 if l1 <= 0.0 else 0.0
            pr = 1.0 if r1 <= 0.0 else 0.0
            fm, fl, fr = pm > 0.0, pl > 0.0, pr > 0.0
        if fm or fl or fr:
            best = -1.0
            best_frac = 2.0
            winner = -1
            for k in range(3):
                if k == 0:
                    fired, p, frac = fm, pm, _first_fraction(d0, d1)
                elif k == 1:
                    fired, p, frac = fl, pl, _first_fraction(l0, l1)
                else:
                    fired, p, frac = fr, pr, _first_fraction(r0, r1)
                if fired and (p > best or (p == best and frac < best_frac)):
                    best, best_frac, winner = p, frac, k
            t = step * dt
            if winner == 0:
                pos = 0.5 * (y1 + y2)
                pos = min(max(pos, a), b)
                return MET, pos, t, step
            return ESCAPED, math.nan, t, step
        x1, x2 = y1, y2
    return TRUNCATED, math.nan, max_steps * dt, max_steps


@numba.njit(cache=True, parallel=True)
def _simulate_batch(x1, x2, a, b, D, dt, max_steps, bridge, seeds, events, positions, times, steps):
    for k in numba.prange(seeds.shape[0]):
        e, p, t, s = _simulate(x1, x2, a, b, D, dt, max_steps, bridge, seeds[k])
        events[k] = e
        positions[k] = p
        times[k] = t
        steps[k] = s


def stream_seeds(seed: int, count: int, prefix: tuple[int, ...] = (), start: int = 0) -> np.ndarray:
    """32-bit MT19937 seeds for realizations ``start .. start+count-1``."""
    out = np.empty(count, dtype=np.uint32)
    for k in range(count):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(*prefix, start + k))
        out[k] = ss.generate_state(1, dtype=np.uint32)[0]
    return out


def _check_inputs(s: PairState, iv: IntervalSpec, cfg: SimConfig) -> float:
    s.check(iv)
    dt = cfg.time_step(iv)
    if dt * cfg.diffusion > 1e-3 * iv.length**2:
        warnings.warn(
            f"dt*D = {dt * cfg.diffusion:.3g} exceeds 1e-3 L^2; discretisation bias may be visible",
            RuntimeWarning,
            stacklevel=3,
        )
    return dt


def _apply_threads(cfg: SimConfig) -> None:
    if cfg.threads:
        numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))


def run_realization(s: PairState, iv: IntervalSpec, cfg: SimConfig, index: int, prefix: tuple[int, ...] = ()) -> RealizationOutcome:
    """Simulate realization number ``index`` of the run described by ``cfg``."""
    if not 0 <= index < cfg.n_realizations:
        raise DomainError(f"index {index} outside [0, {cfg.n_realizations})")
    dt = _check_inputs(s, iv, cfg)
    seed = stream_seeds(cfg.seed, 1, prefix, start=index)[0]
    e, p, t, n = _simulate(s.x1, s.x2, iv.a, iv.b, cfg.diffusion, dt, cfg.step_cap(iv),
                           cfg.bridge_corrections, seed)
    if e == TRUNCATED:
        raise Truncated(f"realization {index} still running after {n} steps")
    if e == MET:
        return RealizationOutcome(Event.MET, float(p), float(t), int(n))
    return RealizationOutcome(Event.ESCAPED, None, float(t), int(n))


def simulate_many(s: PairState, iv: IntervalSpec, cfg: SimConfig, prefix: tuple[int, ...] = ()):
    """Raw per-realization arrays ``(events, positions, times, steps)``."""
    dt = _check_inputs(s, iv, cfg)
    _apply_threads(cfg)
    n = cfg.n_realizations
    seeds = stream_seeds(cfg.seed, n, prefix)
    events = np.empty(n, dtype=np.int64)
    positions = np.empty(n)
    times = np.empty(n)
    steps = np.empty(n, dtype=np.int64)
    _simulate_batch(float(s.x1), float(s.x2), float(iv.a), float(iv.b), float(cfg.diffusion),
                    float(dt), int(cfg.step_cap(iv)), bool(cfg.bridge_corrections), seeds,
                    events, positions, times, steps)
    return events, positions, times, steps


def estimate(
    s: PairState,
    iv: IntervalSpec,
    cfg: SimConfig,
    bins: int | None = None,
    conditional_time: bool = False,
    prefix: tuple[int, ...] = (),
) -> EstimateResult:
    """Estimate the meeting probability from ``cfg.n_realizations`` runs.

    ``bins`` adds a histogram of meeting positions over ``[a, b]``;
    ``conditional_time`` adds the mean meeting time among meeting runs.
    """
    events, positions, times, _ = simulate_many(s, iv, cfg, prefix)
    n = cfg.n_realizations
    met = int(np.count_nonzero(events == MET))
    truncated = int(np.count_nonzero(events == TRUNCATED))
    escaped = n - met - truncated
    if truncated > MAX_TRUNCATED_FRACTION * n:
        raise Truncated(f"{truncated} of {n} realizations hit max_steps")
    if truncated:
        log.warning("%d of %d realizations truncated", truncated, n)
    p = met / n
    result = EstimateResult(
        p_hat=p,
        std_error=math.sqrt(p * (1.0 - p) / n),
        n=n,
        met=met,
        escaped=escaped,
        truncated=truncated,
        sample_variance=p * (1.0 - p) * n / (n - 1) if n > 1 else 0.0,
    )
    if bins:
        counts, edges = np.histogram(positions[events == MET], bins=bins, range=(iv.a, iv.b))
        result.histogram, result.bin_edges = counts, edges
    if conditional_time and met:
        t = times[events == MET]
        mean = math.fsum(t) / met
        var = math.fsum((t - mean) ** 2) / (met - 1) if met > 1 else 0.0
        result.conditional_mean_time = mean
        result.conditional_time_se = math.sqrt(var / met)
    return result


def sweep_curve(x2: float, n_points: int, iv: IntervalSpec, cfg: SimConfig) -> list[tuple[float, float, float]]:
    """``(x1, p_hat, std_error)`` for ``x1`` spread uniformly over ``(a, x2]``.

    Point ``k`` uses the sub-stream prefix ``(k,)`` so every point is
    reproducible on its own.
    """
    if not iv.a < x2 < iv.b:
        raise DomainError(f"x2 must be inside ({iv.a}, {iv.b})")
    if n_points < 2:
        raise DomainError("need at least two points")
    xs = curve_abscissae(x2, n_points, iv)
    rows = []
    for k, x1 in enumerate(xs):
        r = estimate(PairState(float(x1), x2), iv, cfg, prefix=(k,))
        rows.append((float(x1), r.p_hat, r.std_error))
    return rows


def curve_abscissae(x2: float, n_points: int, iv: IntervalSpec) -> np.ndarray:
    """Uniform grid on ``(a, x2]``: ``a + k (x2 - a)/n_points`` for ``k = 1..n_points``."""
    return iv.a + (x2 - iv.a) * np.arange(1, n_points + 1) / n_points


def with_seed(cfg: SimConfig, seed: int) -> SimConfig:
    return replace(cfg, seed=seed)
