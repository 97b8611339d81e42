"""Foothold tracking metrics for a low-level controller's logs.

Logs are inputs only: nothing here simulates a robot, so synthetic logs
drive the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phase import N_FEET

FTS_TOLERANCE = 0.05  # m, planar, closed interval


class MetricInputError(ValueError):
    pass


@dataclass
class TrackingRecord:
    desired_contacts: np.ndarray   # (4,) flags c*_F
    desired_feet: np.ndarray       # (4, 3) targets r*_F
    measured_feet: np.ndarray      # (4, 3) measured r_F

    def __post_init__(self):
        self.desired_contacts = np.asarray(self.desired_contacts, dtype=np.int64)
        self.desired_feet = np.asarray(self.desired_feet, dtype=np.float64)
        self.measured_feet = np.asarray(self.measured_feet, dtype=np.float64)
        if self.desired_contacts.shape != (N_FEET,):
            raise MetricInputError(f"desired_contacts must have shape (4,), got {self.desired_contacts.shape}")
        for name in ("desired_feet", "measured_feet"):
            if getattr(self, name).shape != (N_FEET, 3):
                raise MetricInputError(f"{name} must have shape (4, 3), got {getattr(self, name).shape}")


@dataclass(frozen=True)
class TouchdownEvent:
    foot: int
    touchdown_xy: tuple
    target_xy: tuple

    @property
    def error(self) -> float:
        return float(np.hypot(*np.subtract(self.touchdown_xy, self.target_xy)))


@dataclass
class TrackingLog:
    records: list = field(default_factory=list)
    touchdowns: list = field(default_factory=list)


def compute_fter(log: TrackingLog | list) -> float:
    """Foothold tracking error rate: per-record contact-weighted mean error, averaged over records."""
    records = log.records if isinstance(log, TrackingLog) else list(log)
    if not records:
        raise MetricInputError("tracking log has no records")
    total = 0.0
    for t, r in enumerate(records):
        n = r.desired_contacts.sum()
        if n < 1:
            raise MetricInputError(f"record {t} has no desired contacts")
        err = np.linalg.norm(r.desired_feet - r.measured_feet, axis=1)
        total += float(r.desired_contacts @ err) / n
    return total / len(records)


def compute_fts(events, tolerance: float = FTS_TOLERANCE) -> float:
    """Fraction of touchdowns landing within ``tolerance`` (inclusive) of the target in xy."""
    events = events.touchdowns if isinstance(events, TrackingLog) else list(events)
    if not events:
        raise MetricInputError("no touchdown events")
    return sum(e.error <= tolerance for e in events) / len(events)
