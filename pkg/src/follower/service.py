"""HTTP session API: exposes a live recognition session so a human can be
the answer source, and serves session state for monitoring.

Stepping is pull-based: the client calls ``step`` until a pending query
comes back, answers it, and steps again. Answers are idempotent per
query id. Every mutation persists the full session to disk so a restarted
server resumes mid-stream.
"""

from __future__ import annotations

import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .harness import StreamPolicy, order_stream
from .io_formats import FormatError, load_manifest
from .session import Session, SessionConfig, TraceRecord


class SessionRequest(BaseModel):
    manifest: str
    alpha: float
    bootstrap_queries: int = 10
    mode: str = "active"
    metric: str = "euclidean"
    normalize: bool = False
    seed: int = 0
    policy: str = "random"
    p_new: float = Field(default=0.3, gt=0.0, lt=1.0)


class AnswerRequest(BaseModel):
    query_id: str
    same_object: bool


class LiveSession:
    """One served session: the engine plus its prepared stream."""

    def __init__(self, session: Session, manifest_path: str,
                 stream_ids: list[str], position: int = 0,
                 resolved: dict[str, dict] | None = None):
        self.session = session
        self.manifest_path = manifest_path
        self.stream_ids = stream_ids
        self.position = position
        self.resolved = resolved or {}  # query_id -> {answer, decision}
        self.lock = threading.Lock()
        self._samples = None

    def samples_by_id(self):
        if self._samples is None:
            manifest = load_manifest(self.manifest_path)
            self._samples = {s.sequence_id: s for s in manifest.sequences}
        return self._samples

    def to_state(self) -> dict:
        return {
            "session": self.session.to_state(),
            "manifest_path": self.manifest_path,
            "stream_ids": self.stream_ids,
            "position": self.position,
            "resolved": self.resolved,
        }

    @classmethod
    def from_state(cls, state: dict) -> "LiveSession":
        return cls(Session.from_state(state["session"]),
                   state["manifest_path"], state["stream_ids"],
                   state["position"], state["resolved"])


def _summary(live: LiveSession) -> dict:
    session = live.session
    trace = session.trace
    queries = sum(1 for r in trace if r.queried)
    lambda_l, lambda_u = session.current_thresholds()
    return {
        "memory_size": len(session.memory),
        "supervision_size": len(session.supervision),
        "distinct_labels": session.distinct_labels,
        "lambda_l": lambda_l,
        "lambda_u": lambda_u,
        "lambda_r": session.current_lambda_r(),
        "query_rate": queries / len(trace) if trace else 0.0,
        "steps": len(trace),
        "stream_length": len(live.stream_ids),
        "stream_position": live.position,
        "pending": session.pending.to_dict() if session.pending else None,
    }


def create_app(data_dir, ui_dir=None) -> FastAPI:
    data_dir = Path(data_dir)
    sessions_dir = data_dir / "sessions"
    sessions_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="follower-session-service")
    registry: dict[str, LiveSession] = {}
    registry_lock = threading.Lock()

    for path in sorted(sessions_dir.glob("*.json")):
        try:
            registry[path.stem] = LiveSession.from_state(
                json.loads(path.read_text()))
        except (ValueError, KeyError):
            continue  # unreadable snapshots are skipped, not fatal

    def persist(session_id: str, live: LiveSession) -> None:
        path = sessions_dir / f"{session_id}.json"
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(live.to_state(), sort_keys=True))
        tmp.replace(path)

    def get_live(session_id: str) -> LiveSession:
        with registry_lock:
            live = registry.get(session_id)
        if live is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return live

    @app.post("/sessions", status_code=201)
    def create_session(req: SessionRequest):
        manifest_path = Path(req.manifest)
        if not manifest_path.is_absolute():
            manifest_path = data_dir / manifest_path
        try:
            manifest = load_manifest(manifest_path)
            config = SessionConfig(alpha=req.alpha,
                                   bootstrap_queries=req.bootstrap_queries,
                                   mode=req.mode, metric=req.metric,
                                   normalize=req.normalize, seed=req.seed)
            policy = StreamPolicy(req.policy, req.p_new)
        except (FormatError, FileNotFoundError, ValueError) as exc:
            raise HTTPException(400, str(exc))
        rng = np.random.default_rng(req.seed)
        stream = order_stream(manifest.sequences, policy, rng)
        live = LiveSession(Session(config), str(manifest_path),
                           [s.sequence_id for s in stream])
        session_id = uuid.uuid4().hex
        with registry_lock:
            registry[session_id] = live
        persist(session_id, live)
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str):
        live = get_live(session_id)
        with live.lock:
            if live.session.pending is not None:
                raise HTTPException(
                    409, "a query is pending; answer it before stepping")
            if live.position >= len(live.stream_ids):
                return {"status": "end_of_stream"}
            sample = live.samples_by_id()[live.stream_ids[live.position]]
            result = live.session.begin(sample)
            if isinstance(result, TraceRecord):
                live.position += 1
                persist(session_id, live)
                return {"status": "decision", "decision": result.to_dict()}
            persist(session_id, live)
            return {"status": "pending", "pending": result.to_dict()}

    @app.get("/sessions/{session_id}/pending")
    def pending(session_id: str):
        live = get_live(session_id)
        with live.lock:
            p = live.session.pending
            return {"pending": p.to_dict() if p else None}

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, req: AnswerRequest):
        live = get_live(session_id)
        with live.lock:
            done = live.resolved.get(req.query_id)
            if done is not None:
                if done["answer"] != req.same_object:
                    raise HTTPException(
                        409, f"query {req.query_id!r} was already answered "
                             f"differently")
                return {"status": "decision", "decision": done["decision"]}
            p = live.session.pending
            if p is None or p.query_id != req.query_id:
                raise HTTPException(
                    409, f"query {req.query_id!r} is not pending")
            record = live.session.resolve(req.same_object)
            live.position += 1
            live.resolved[req.query_id] = {
                "answer": req.same_object,
                "decision": record.to_dict(),
            }
            persist(session_id, live)
            return {"status": "decision", "decision": record.to_dict()}

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str):
        live = get_live(session_id)
        with live.lock:
            return _summary(live)

    @app.get("/sessions/{session_id}/trace")
    def trace(session_id: str):
        live = get_live(session_id)
        with live.lock:
            return {"trace": [r.to_dict() for r in live.session.trace]}

    static_dir = data_dir / "static"
    if static_dir.is_dir():
        app.mount("/static", StaticFiles(directory=static_dir), name="static")
    if ui_dir is None:
        ui_dir = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    ui_dir = Path(ui_dir)
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
