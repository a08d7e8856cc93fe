"""The online recognition loop: per-sequence decisions, user querying,
memory updates and bootstrap handling, plus the query-free mode.

A session owns its memory store and supervision log. Each incoming sequence
is aggregated, compared against its exact nearest neighbour, and either
recognized as an already-seen object, declared new, or escalated to the
answer source when the distance falls inside the current query band. In
unsupervised mode the single recognition cut replaces the band and no
queries are ever issued.

``process_sequence`` drives one iteration end to end given a synchronous
answer source. For live (human) supervision the two-phase ``begin`` /
``resolve`` pair suspends the iteration on a pending query so the process
can persist and resume without losing state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import Callable

import numpy as np

from .core import Metric, SequenceSample, embed_video
from .memory import MemoryStore, SupervisionLog
from .thresholds import (BootstrapRequired, get_decision_thresholds,
                         get_recognition_threshold)

STATE_VERSION = 1

AnswerSource = Callable[["PendingQuery"], bool]


class PendingQueryError(RuntimeError):
    """An operation that needs a fresh iteration was called while a query
    is awaiting its answer (or vice versa)."""


@dataclass
class SessionConfig:
    alpha: float
    bootstrap_queries: int = 10
    mode: str = "active"  # "active" or "unsupervised"
    metric: str = "euclidean"
    normalize: bool = False
    seed: int | None = None  # provenance only; the loop itself is deterministic

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.mode not in ("active", "unsupervised"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "active" and self.bootstrap_queries < 1:
            raise ValueError("active mode needs bootstrap_queries >= 1")
        if self.bootstrap_queries < 0:
            raise ValueError("bootstrap_queries must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PendingQuery:
    """A suspended iteration waiting for a same/different answer."""

    query_id: str
    sequence_id: str
    sequence_metadata: dict[str, str]
    nn_sequence_id: str
    nn_label: int
    nn_metadata: dict[str, str]
    delta: float
    lambda_l: float | None
    lambda_u: float | None
    forced: bool  # bootstrap-forced rather than band-triggered

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TraceRecord:
    """One iteration of the loop, with everything the metrics need."""

    iteration: int
    sequence_id: str
    true_object: str | None
    label: int
    kind: str  # "seen" or "new"
    delta: float | None
    nn_sequence_id: str | None
    nn_label: int | None
    lambda_l: float | None
    lambda_u: float | None
    lambda_r: float | None
    queried: bool
    forced: bool
    answer: bool | None
    nn_same: bool | None       # oracle: NN shares the true object
    seen_before: bool | None   # oracle: true object already in memory

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TraceRecord":
        return cls(**d)


CSV_FIELDS = ["iteration", "sequence_id", "true_object", "label", "kind",
              "delta", "nn_sequence_id", "nn_label", "lambda_l", "lambda_u",
              "lambda_r", "queried", "forced", "answer", "nn_same",
              "seen_before"]


class Session:
    """State machine for one open-world recognition run."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.metric = Metric(config.metric, config.normalize)
        self.memory = MemoryStore()
        self.supervision = SupervisionLog()
        self.trace: list[TraceRecord] = []
        self.audit: list[dict] = []  # per-answer audit rows (sequence ids etc.)
        self.mode = config.mode
        self.pending: PendingQuery | None = None
        self._pending_ctx: dict | None = None
        self._next_id = 0
        self._query_counter = 0

    # -- identifiers ------------------------------------------------------

    def _new_id(self) -> int:
        label = self._next_id
        self._next_id += 1
        return label

    @property
    def next_id(self) -> int:
        return self._next_id

    @property
    def distinct_labels(self) -> int:
        return self._next_id

    # -- policy helpers ---------------------------------------------------

    def bootstrap_active(self) -> bool:
        """Force a query while the log is still too small to trust and
        there is something in memory to compare against."""
        return (self.mode == "active"
                and len(self.memory) > 0
                and len(self.supervision) < self.config.bootstrap_queries)

    def current_thresholds(self) -> tuple[float | None, float | None]:
        """Query band from the current log, or (None, None) pre-bootstrap."""
        try:
            t = get_decision_thresholds(self.supervision, self.config.alpha)
            return t.lambda_l, t.lambda_u
        except BootstrapRequired:
            return None, None

    def current_lambda_r(self) -> float | None:
        try:
            return get_recognition_threshold(self.supervision)
        except BootstrapRequired:
            return None

    # -- the loop ---------------------------------------------------------

    def begin(self, sample: SequenceSample) -> TraceRecord | PendingQuery:
        """Start one iteration. Returns the completed record when no query
        is needed, or a :class:`PendingQuery` that must be resolved."""
        if self.pending is not None:
            raise PendingQueryError("a query is already pending")

        rep = embed_video(sample)
        lambda_r = self.current_lambda_r()

        if len(self.memory) == 0:
            # Nothing to compare against: memorize as a new object, no query.
            return self._commit(sample, rep, label=self._new_id(), kind="new",
                                delta=None, nn=None, lambda_l=None,
                                lambda_u=None, lambda_r=lambda_r,
                                queried=False, forced=False, answer=None)

        nn_entry, delta = self.memory.nearest(rep, self.metric)

        if self.mode == "unsupervised":
            if lambda_r is not None and delta < lambda_r:
                label, kind = nn_entry.label, "seen"
            else:
                # No calibration at all defaults to declaring new objects.
                label, kind = self._new_id(), "new"
            return self._commit(sample, rep, label=label, kind=kind,
                                delta=delta, nn=nn_entry, lambda_l=None,
                                lambda_u=None, lambda_r=lambda_r,
                                queried=False, forced=False, answer=None)

        forced = self.bootstrap_active()
        if forced:
            lambda_l = lambda_u = None
        else:
            lambda_l, lambda_u = self.current_thresholds()
            if lambda_l is not None and delta < lambda_l:
                return self._commit(sample, rep, label=nn_entry.label,
                                    kind="seen", delta=delta, nn=nn_entry,
                                    lambda_l=lambda_l, lambda_u=lambda_u,
                                    lambda_r=lambda_r, queried=False,
                                    forced=False, answer=None)
            if lambda_u is not None and delta > lambda_u:
                return self._commit(sample, rep, label=self._new_id(),
                                    kind="new", delta=delta, nn=nn_entry,
                                    lambda_l=lambda_l, lambda_u=lambda_u,
                                    lambda_r=lambda_r, queried=False,
                                    forced=False, answer=None)
            if lambda_l is None:
                # alpha = 0 admits no query band; fall back to the single cut.
                if lambda_r is not None and delta < lambda_r:
                    label, kind = nn_entry.label, "seen"
                else:
                    label, kind = self._new_id(), "new"
                return self._commit(sample, rep, label=label, kind=kind,
                                    delta=delta, nn=nn_entry, lambda_l=None,
                                    lambda_u=None, lambda_r=lambda_r,
                                    queried=False, forced=False, answer=None)

        query = PendingQuery(
            query_id=f"q{self._query_counter}",
            sequence_id=sample.sequence_id,
            sequence_metadata=dict(sample.metadata),
            nn_sequence_id=nn_entry.sequence_id,
            nn_label=nn_entry.label,
            nn_metadata=dict(nn_entry.metadata),
            delta=delta,
            lambda_l=lambda_l,
            lambda_u=lambda_u,
            forced=forced,
        )
        self._query_counter += 1
        self.pending = query
        self._pending_ctx = {"sample": sample, "rep": rep, "nn": nn_entry,
                             "lambda_r": lambda_r}
        return query

    def resolve(self, same_object: bool) -> TraceRecord:
        """Complete a suspended iteration with the user's answer."""
        if self.pending is None:
            raise PendingQueryError("no query is pending")
        query = self.pending
        ctx = self._pending_ctx
        self.pending = None
        self._pending_ctx = None

        sample: SequenceSample = ctx["sample"]
        nn = ctx["nn"]
        same_object = bool(same_object)
        if same_object:
            label, kind = nn.label, "seen"
        else:
            label, kind = self._new_id(), "new"
        self.supervision.insert(query.delta, same_object)
        self.audit.append({
            "sequence_id": sample.sequence_id,
            "nn_sequence_id": nn.sequence_id,
            "delta": query.delta,
            "answer": same_object,
            "forced": query.forced,
        })
        return self._commit(sample, ctx["rep"], label=label, kind=kind,
                            delta=query.delta, nn=nn,
                            lambda_l=query.lambda_l, lambda_u=query.lambda_u,
                            lambda_r=ctx["lambda_r"], queried=True,
                            forced=query.forced, answer=same_object)

    def process_sequence(self, sample: SequenceSample,
                         answer_source: AnswerSource | None = None
                         ) -> TraceRecord:
        """Run one full iteration, consulting ``answer_source`` if a query
        is needed. Without an answer source the session stays suspended and
        :class:`PendingQueryError` is raised (state is preserved)."""
        result = self.begin(sample)
        if isinstance(result, TraceRecord):
            return result
        if answer_source is None:
            raise PendingQueryError(
                f"query {result.query_id} needs an answer source"
            )
        return self.resolve(answer_source(result))

    def _commit(self, sample: SequenceSample, rep: np.ndarray, *, label: int,
                kind: str, delta, nn, lambda_l, lambda_u, lambda_r,
                queried: bool, forced: bool, answer) -> TraceRecord:
        nn_same = None
        seen_before = None
        if sample.true_object is not None:
            seen_before = sample.true_object in self.memory.true_objects
            if nn is not None and nn.true_object is not None:
                nn_same = nn.true_object == sample.true_object
        record = TraceRecord(
            iteration=len(self.trace),
            sequence_id=sample.sequence_id,
            true_object=sample.true_object,
            label=label,
            kind=kind,
            delta=delta,
            nn_sequence_id=nn.sequence_id if nn is not None else None,
            nn_label=nn.label if nn is not None else None,
            lambda_l=lambda_l,
            lambda_u=lambda_u,
            lambda_r=lambda_r,
            queried=queried,
            forced=forced,
            answer=answer,
            nn_same=nn_same,
            seen_before=seen_before,
        )
        self.memory.append(rep, label, sample.sequence_id,
                           metadata=sample.metadata,
                           true_object=sample.true_object)
        self.trace.append(record)
        return record

    def switch_mode(self, mode: str) -> None:
        if mode not in ("active", "unsupervised"):
            raise ValueError(f"unknown mode {mode!r}")
        if self.pending is not None:
            raise PendingQueryError("cannot switch mode with a pending query")
        self.mode = mode

    # -- persistence ------------------------------------------------------

    def to_state(self) -> dict:
        """Versioned JSON-serializable snapshot of the whole session.

        A suspended iteration is persisted through the pending query plus
        the embedded representation, so resume needs no recomputation.
        """
        state = {
            "version": STATE_VERSION,
            "config": self.config.to_dict(),
            "mode": self.mode,
            "next_id": self._next_id,
            "query_counter": self._query_counter,
            "memory": [
                {
                    "sequence_id": e.sequence_id,
                    "label": e.label,
                    "representation": [float(x) for x in e.representation],
                    "metadata": e.metadata,
                    "true_object": e.true_object,
                }
                for e in self.memory.entries
            ],
            "supervision": [
                {"delta": d, "answer": a}
                for d, a in self.supervision.records()
            ],
            "audit": self.audit,
            "trace": [r.to_dict() for r in self.trace],
            "pending": None,
        }
        if self.pending is not None:
            state["pending"] = {
                "query": self.pending.to_dict(),
                "true_object": self._pending_ctx["sample"].true_object,
                "representation": [float(x)
                                   for x in self._pending_ctx["rep"]],
                "lambda_r": self._pending_ctx["lambda_r"],
            }
        return state

    def state_json(self) -> str:
        return json.dumps(self.to_state(), sort_keys=True,
                          separators=(",", ":"))

    @classmethod
    def from_state(cls, state: dict) -> "Session":
        if state.get("version") != STATE_VERSION:
            raise ValueError(
                f"unsupported session state version {state.get('version')!r}"
            )
        session = cls(SessionConfig(**state["config"]))
        session.mode = state["mode"]
        for e in state["memory"]:
            session.memory.append(np.asarray(e["representation"]),
                                  e["label"], e["sequence_id"],
                                  metadata=e["metadata"],
                                  true_object=e["true_object"])
        for r in state["supervision"]:
            session.supervision.insert(r["delta"], r["answer"])
        session.audit = list(state["audit"])
        session.trace = [TraceRecord.from_dict(r) for r in state["trace"]]
        session._next_id = state["next_id"]
        session._query_counter = state["query_counter"]
        if state["pending"] is not None:
            p = state["pending"]
            query = PendingQuery(**p["query"])
            session.pending = query
            rep = np.asarray(p["representation"], dtype=np.float64)
            sample = SequenceSample(query.sequence_id, rep.reshape(1, -1),
                                    true_object=p["true_object"],
                                    metadata=query.sequence_metadata)
            # the NN entry is recovered by sequence id from memory
            nn = next(e for e in session.memory.entries
                      if e.sequence_id == query.nn_sequence_id)
            session._pending_ctx = {"sample": sample, "rep": rep, "nn": nn,
                                    "lambda_r": p["lambda_r"]}
        return session


def run_always_ask(samples, answer_source: AnswerSource,
                   config: SessionConfig) -> Session:
    """Fully supervised baseline: ask at every iteration after the first.

    Implemented as its own loop over the primitive stores (not by tuning
    the adaptive session) so the two code paths can be checked against each
    other. Every non-first sequence triggers a query regardless of distance.
    """
    session = Session(SessionConfig(
        alpha=config.alpha, bootstrap_queries=max(1, config.bootstrap_queries),
        mode="active", metric=config.metric, normalize=config.normalize,
        seed=config.seed))
    metric = session.metric
    for sample in samples:
        rep = embed_video(sample)
        lambda_r = session.current_lambda_r()
        if len(session.memory) == 0:
            session._commit(sample, rep, label=session._new_id(), kind="new",
                            delta=None, nn=None, lambda_l=None, lambda_u=None,
                            lambda_r=lambda_r, queried=False, forced=False,
                            answer=None)
            continue
        nn, delta = session.memory.nearest(rep, metric)
        query = PendingQuery(
            query_id=f"q{session._query_counter}",
            sequence_id=sample.sequence_id,
            sequence_metadata=dict(sample.metadata),
            nn_sequence_id=nn.sequence_id,
            nn_label=nn.label,
            nn_metadata=dict(nn.metadata),
            delta=delta, lambda_l=None, lambda_u=None, forced=True)
        session._query_counter += 1
        y = bool(answer_source(query))
        label = nn.label if y else session._new_id()
        session.supervision.insert(delta, y)
        session.audit.append({
            "sequence_id": sample.sequence_id,
            "nn_sequence_id": nn.sequence_id,
            "delta": delta,
            "answer": y,
            "forced": True,
        })
        session._commit(sample, rep, label=label,
                        kind="seen" if y else "new", delta=delta, nn=nn,
                        lambda_l=None, lambda_u=None, lambda_r=lambda_r,
                        queried=True, forced=True, answer=y)
    return session
