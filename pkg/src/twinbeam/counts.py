"""Click-count containers shared by the slot counter and the estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class CountHistogram:
    """Slots per click number for one channel.

    The last bin collects every slot with ``cap`` or more clicks.
    """

    counts: np.ndarray
    total_slots: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or counts.size == 0:
            raise DomainError("histogram counts must be a non-empty vector")
        if np.any(counts < 0):
            raise DomainError("histogram counts must be nonnegative")
        if counts.sum() > self.total_slots:
            raise DomainError("histogram holds more events than slots")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total_slots", int(self.total_slots))

    @property
    def cap(self) -> int:
        return self.counts.size - 1

    @property
    def frequencies(self) -> np.ndarray:
        if self.total_slots == 0:
            raise DomainError("histogram has no slots")
        return self.counts / self.total_slots

    def __add__(self, other: CountHistogram) -> CountHistogram:
        if self.cap != other.cap:
            raise DomainError("cannot merge histograms with different caps")
        return CountHistogram(self.counts + other.counts, self.total_slots + other.total_slots)

    @classmethod
    def from_probabilities(cls, probs, total_slots: int) -> CountHistogram:
        """Histogram holding ``round(p * total_slots)`` slots per bin (no sampling)."""
        probs = np.asarray(probs, dtype=float)
        counts = np.rint(probs * total_slots).astype(np.int64)
        return cls(counts, max(int(total_slots), int(counts.sum())))


@dataclass(frozen=True)
class JointCountMatrix:
    """Slot counts ``N[n, m]`` of ``n`` signal and ``m`` idler clicks.

    ``offset_slots`` is 0 for same-slot coincidences and the pairing offset
    for accidentals. Clicks at or above the cap land in the last row/column.
    """

    counts: np.ndarray
    total_slots: int
    offset_slots: int = 0

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DomainError("joint counts must be a square matrix")
        if np.any(counts < 0):
            raise DomainError("joint counts must be nonnegative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total_slots", int(self.total_slots))
        object.__setattr__(self, "offset_slots", int(self.offset_slots))

    @property
    def cap(self) -> int:
        return self.counts.shape[0] - 1

    @property
    def probabilities(self) -> np.ndarray:
        if self.total_slots <= 0:
            raise DomainError("joint count matrix has no slots")
        return self.counts / self.total_slots

    def marginal(self, axis: str) -> CountHistogram:
        """Per-arm histogram; ``axis`` is ``"signal"`` or ``"idler"``."""
        if axis == "signal":
            return CountHistogram(self.counts.sum(axis=1), self.total_slots)
        if axis == "idler":
            return CountHistogram(self.counts.sum(axis=0), self.total_slots)
        raise DomainError(f"unknown axis {axis!r}")

    def __add__(self, other: JointCountMatrix) -> JointCountMatrix:
        if self.counts.shape != other.counts.shape or self.offset_slots != other.offset_slots:
            raise DomainError("cannot merge joint matrices with different cap or offset")
        return JointCountMatrix(
            self.counts + other.counts, self.total_slots + other.total_slots, self.offset_slots
        )

    @classmethod
    def zeros(cls, cap: int = 3, offset_slots: int = 0) -> JointCountMatrix:
        return cls(np.zeros((cap + 1, cap + 1), dtype=np.int64), 0, offset_slots)
