"""Meeting probability of two Brownian particles on a finite interval."""

from .errors import (
    BrownMeetError,
    ConditioningError,
    CornerUndefined,
    DomainError,
    NonConvergence,
    Truncated,
)
from .geometry import IntervalSpec, MeetingSet, PairState

__version__ = "0.1.0"

__all__ = [
    "BrownMeetError",
    "ConditioningError",
    "CornerUndefined",
    "DomainError",
    "IntervalSpec",
    "MeetingSet",
    "NonConvergence",
    "PairState",
    "Truncated",
    "__version__",
]
