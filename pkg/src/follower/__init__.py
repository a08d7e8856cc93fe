"""Open-world instance-level object recognition over embedding streams.

The engine memorizes every sequence it sees, decides same/new/ask-the-user
through distance thresholds calibrated from the answers it has collected,
and ships with the full experimental harness (stream policies, splits,
re-identification and clustering metrics) plus an HTTP session service for
live human supervision.
"""

from .core import (DatasetManifest, DimensionMismatchError, EmptySequenceError,
                   Metric, SequenceSample, embed_video)
from .memory import EmptyMemoryError, MemoryEntry, MemoryStore, SupervisionLog
from .session import (PendingQuery, PendingQueryError, Session, SessionConfig,
                      TraceRecord, run_always_ask)
from .thresholds import (BootstrapRequired, DecisionThresholds, binary_entropy,
                         get_decision_thresholds, get_recognition_threshold,
                         window_length)

__all__ = [
    "BootstrapRequired",
    "DatasetManifest",
    "DecisionThresholds",
    "DimensionMismatchError",
    "EmptyMemoryError",
    "EmptySequenceError",
    "MemoryEntry",
    "MemoryStore",
    "Metric",
    "PendingQuery",
    "PendingQueryError",
    "SequenceSample",
    "Session",
    "SessionConfig",
    "SupervisionLog",
    "TraceRecord",
    "binary_entropy",
    "embed_video",
    "get_decision_thresholds",
    "get_recognition_threshold",
    "run_always_ask",
    "window_length",
]

__version__ = "0.1.0"
