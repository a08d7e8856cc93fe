"""Foundational value types: embeddings, sequences, the distance function
and sequence aggregation.

An embedding is a plain 1-D numpy float array. A sequence groups the ordered
frame embeddings of one short video together with an opaque id, an optional
ground-truth object label (oracle-enabled datasets only) and free-form string
metadata.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionMismatchError(ValueError):
    """Two embeddings (or frames within a sequence) disagree on dimension."""


class EmptySequenceError(ValueError):
    """A sequence with no frames cannot be aggregated."""


@dataclass
class SequenceSample:
    """One short video: ordered frame embeddings plus identity metadata.

    ``frames`` is stored as a (n_frames, dim) float array. ``true_object`` is
    oracle-only ground truth; it is never consulted by the decision loop.
    """

    sequence_id: str
    frames: np.ndarray
    true_object: str | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim == 1:
            frames = frames.reshape(1, -1)
        if frames.ndim != 2 or frames.shape[0] == 0:
            raise EmptySequenceError(
                f"sequence {self.sequence_id!r} has no frames"
            )
        if frames.shape[1] < 1:
            raise DimensionMismatchError(
                f"sequence {self.sequence_id!r} has zero-dimensional frames"
            )
        if not np.all(np.isfinite(frames)):
            raise ValueError(
                f"sequence {self.sequence_id!r} contains non-finite values"
            )
        self.frames = frames

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def embed_video(sample: SequenceSample) -> np.ndarray:
    """Aggregate a sequence into a single representation.

    All frames are assumed to show the same object (persistence), so the
    component-wise arithmetic mean is a valid summary. Accumulation happens
    in float64 so the result is order-independent up to rounding.
    """
    return sample.frames.mean(axis=0, dtype=np.float64)


@dataclass(frozen=True)
class Metric:
    """Distance configuration: metric kind plus optional L2 pre-normalization.

    kind is "euclidean" (default) or "cosine". When ``normalize`` is set,
    inputs are L2-normalized before the distance is taken.
    """

    kind: str = "euclidean"
    normalize: bool = False

    def __post_init__(self):
        if self.kind not in ("euclidean", "cosine"):
            raise ValueError(f"unknown metric kind {self.kind!r}")

    def _prep(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if self.normalize or self.kind == "cosine":
            norm = np.linalg.norm(v)
            if norm == 0.0:
                if self.kind == "cosine":
                    raise ValueError("cosine distance undefined for zero vector")
                return v
            return v / norm
        return v

    def __call__(self, a: np.ndarray, b: np.ndarray) -> float:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise DimensionMismatchError(
                f"dimension mismatch: {a.shape} vs {b.shape}"
            )
        a, b = self._prep(a), self._prep(b)
        if self.kind == "cosine":
            return float(np.clip(1.0 - np.dot(a, b), 0.0, 2.0))
        return float(np.linalg.norm(a - b))

    def to_all(self, query: np.ndarray, matrix: np.ndarray) -> np.ndarray:
        """Distances from ``query`` to every row of ``matrix``."""
        query = np.asarray(query, dtype=np.float64)
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape[1] != query.shape[0]:
            raise DimensionMismatchError(
                f"dimension mismatch: {matrix.shape[1]} vs {query.shape[0]}"
            )
        if self.kind == "cosine":
            q = self._prep(query)
            norms = np.linalg.norm(matrix, axis=1)
            if np.any(norms == 0.0):
                raise ValueError("cosine distance undefined for zero vector")
            sims = (matrix @ q) / norms
            return np.clip(1.0 - sims, 0.0, 2.0)
        if self.normalize:
            norms = np.linalg.norm(matrix, axis=1, keepdims=True)
            norms[norms == 0.0] = 1.0
            matrix = matrix / norms
            query = self._prep(query)
        return np.linalg.norm(matrix - query, axis=1)


@dataclass
class DatasetManifest:
    """A collection of sequences plus the label universe derived from them."""

    sequences: list[SequenceSample]

    def __post_init__(self):
        seen_ids = set()
        for s in self.sequences:
            if s.sequence_id in seen_ids:
                raise ValueError(f"duplicate sequence id {s.sequence_id!r}")
            seen_ids.add(s.sequence_id)

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def objects(self) -> list[str]:
        """Sorted distinct object labels (None excluded)."""
        return sorted({s.true_object for s in self.sequences
                       if s.true_object is not None})

    def by_object(self) -> dict[str, list[SequenceSample]]:
        out: dict[str, list[SequenceSample]] = {}
        for s in self.sequences:
            if s.true_object is not None:
                out.setdefault(s.true_object, []).append(s)
        return out
