"""Physical interval, particle pair and meeting-set value types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError


@dataclass(frozen=True)
class IntervalSpec:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or self.b <= self.a:
            raise DomainError(f"need finite a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def relative(self, x: float) -> float:
        return (x - self.a) / self.length


@dataclass(frozen=True)
class PairState:
    """Ordered particle positions ``x1 <= x2``."""

    x1: float
    x2: float

    def check(self, iv: IntervalSpec, strict: bool = False) -> None:
        """Raise :class:`DomainError` unless ``a <= x1 <= x2 <= b``.

        With ``strict`` the inequalities must hold strictly.
        """
        x1, x2, a, b = self.x1, self.x2, iv.a, iv.b
        ok = a < x1 < x2 < b if strict else a <= x1 <= x2 <= b
        if not ok:
            rel = "<" if strict else "<="
            raise DomainError(f"need a {rel} x1 {rel} x2 {rel} b, got x1={x1}, x2={x2} on [{a}, {b}]")

    def triangle_point(self, iv: IntervalSpec) -> complex:
        """Unit-triangle coordinate ``((x2-a) + i(x1-a)) / L``."""
        return complex(iv.relative(self.x2), iv.relative(self.x1))


@dataclass(frozen=True)
class MeetingSet:
    """Finite union of disjoint closed subintervals of ``[a, b]``."""

    intervals: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        ivs = tuple(sorted((float(lo), float(hi)) for lo, hi in self.intervals))
        for lo, hi in ivs:
            if hi < lo:
                raise DomainError(f"empty or reversed subinterval [{lo}, {hi}]")
        for (_, hi), (lo, _) in zip(ivs, ivs[1:]):
            if lo < hi:
                raise DomainError("subintervals overlap")
        object.__setattr__(self, "intervals", ivs)

    def check(self, iv: IntervalSpec) -> None:
        for lo, hi in self.intervals:
            if lo < iv.a or hi > iv.b:
                raise DomainError(f"[{lo}, {hi}] is not inside [{iv.a}, {iv.b}]")
