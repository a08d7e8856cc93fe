"""The two growing stores of the online loop: the representation memory and
the supervision log, plus exact nearest-neighbour retrieval.

Nearest-neighbour search is an exact linear scan over a contiguous float64
matrix. At the scales this engine targets (hundreds of entries, d up to a
few thousand) a vectorized scan takes microseconds; approximate indexes are
deliberately out of scope because the decision thresholds are calibrated on
exact distances.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Metric


class EmptyMemoryError(LookupError):
    """Nearest-neighbour query against an empty store."""


@dataclass
class MemoryEntry:
    representation: np.ndarray
    label: int
    sequence_id: str
    metadata: dict[str, str] = field(default_factory=dict)
    true_object: str | None = None  # oracle bookkeeping, never used to decide


class MemoryStore:
    """Append-only store of (representation, object id) pairs.

    Entries are never mutated or deleted; insertion order is preserved and
    ties in nearest-neighbour distance resolve to the earliest entry.
    """

    def __init__(self, dim: int | None = None):
        self._dim = dim
        self._entries: list[MemoryEntry] = []
        self._matrix = np.empty((0, dim or 0), dtype=np.float64)
        self._size = 0
        self._true_objects: set[str] = set()

    def __len__(self) -> int:
        return self._size

    @property
    def dim(self) -> int | None:
        return self._dim

    @property
    def entries(self) -> list[MemoryEntry]:
        return self._entries

    @property
    def matrix(self) -> np.ndarray:
        """Read-only view of the stored representations, one per row."""
        return self._matrix[: self._size]

    @property
    def true_objects(self) -> set[str]:
        return self._true_objects

    def append(self, representation: np.ndarray, label: int, sequence_id: str,
               metadata: dict[str, str] | None = None,
               true_object: str | None = None) -> MemoryEntry:
        rep = np.asarray(representation, dtype=np.float64)
        if rep.ndim != 1:
            raise ValueError("representation must be a 1-D vector")
        if self._dim is None:
            self._dim = rep.shape[0]
            self._matrix = np.empty((4, self._dim), dtype=np.float64)
        elif rep.shape[0] != self._dim:
            raise ValueError(
                f"dimension mismatch: store is {self._dim}-d, got {rep.shape[0]}"
            )
        if self._size == self._matrix.shape[0]:
            grown = np.empty((max(4, 2 * self._size), self._dim), np.float64)
            grown[: self._size] = self._matrix[: self._size]
            self._matrix = grown
        self._matrix[self._size] = rep
        entry = MemoryEntry(self._matrix[self._size], int(label), sequence_id,
                            dict(metadata or {}), true_object)
        self._entries.append(entry)
        self._size += 1
        if true_object is not None:
            self._true_objects.add(true_object)
        return entry

    def nearest(self, query: np.ndarray, metric: Metric) -> tuple[MemoryEntry, float]:
        """Exact nearest neighbour of ``query``; earliest entry wins ties."""
        if self._size == 0:
            raise EmptyMemoryError("memory store is empty")
        dists = metric.to_all(query, self.matrix)
        idx = int(np.argmin(dists))  # argmin returns the first minimum
        return self._entries[idx], float(dists[idx])


class SupervisionLog:
    """User answers paired with the distances that triggered them.

    Records are kept sorted ascending by distance; among equal distances the
    insertion order is preserved. Only (distance, answer) pairs live here —
    audit metadata is the session's concern.
    """

    def __init__(self):
        self._deltas: list[float] = []
        self._answers: list[bool] = []

    def __len__(self) -> int:
        return len(self._deltas)

    @property
    def deltas(self) -> list[float]:
        return self._deltas

    @property
    def answers(self) -> list[bool]:
        return self._answers

    def records(self) -> list[tuple[float, bool]]:
        return list(zip(self._deltas, self._answers))

    def insert(self, delta: float, answer: bool) -> None:
        delta = float(delta)
        if not math.isfinite(delta):
            raise ValueError(f"non-finite distance {delta!r}")
        if delta < 0.0:
            raise ValueError(f"negative distance {delta!r}")
        # insort_right keeps equal-delta records in insertion order
        i = bisect.bisect_right(self._deltas, delta)
        self._deltas.insert(i, delta)
        self._answers.insert(i, bool(answer))
