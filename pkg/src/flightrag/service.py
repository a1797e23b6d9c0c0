"""HTTP facade over the engine.

Sessions exist only to carry the two-turn clarification protocol: when an
answer requests clarification, the original question is parked under the
session and the next message is merged into it and fully re-routed.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .flight_store import UnknownField, field_to_str, lookup, FIELD_NAMES
from .pipelines import PIPELINES, Engine, UnknownPipeline
from .router import merge_clarification

SESSION_TTL_S = 15 * 60.0


@dataclass
class Session:
    session_id: str
    expires_at: float
    pending_question: Optional[str] = None


class SessionStore:
    def __init__(self, ttl_s: float = SESSION_TTL_S, clock=time.monotonic):
        self._ttl = ttl_s
        self._clock = clock
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _purge(self, now: float) -> None:
        dead = [sid for sid, s in self._sessions.items() if s.expires_at <= now]
        for sid in dead:
            del self._sessions[sid]

    def get_or_create(self, session_id: Optional[str]) -> Session:
        now = self._clock()
        with self._lock:
            self._purge(now)
            if session_id and session_id in self._sessions:
                session = self._sessions[session_id]
            else:
                session = Session(session_id=session_id or uuid.uuid4().hex, expires_at=0.0)
                self._sessions[session.session_id] = session
            session.expires_at = now + self._ttl
            return session


class AskRequest(BaseModel):
    question: str
    pipeline: str = "traditional"
    session_id: Optional[str] = None


class AskResponse(BaseModel):
    session_id: str
    answer: str
    pipeline: str
    category: str
    needs_clarification: bool
    evidence_doc_ids: list[str]
    query_text: str
    flagged_entities: list[str]


def create_app(engine: Engine, session_ttl_s: float = SESSION_TTL_S, clock=time.monotonic) -> FastAPI:
    app = FastAPI(title="flightrag", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions = SessionStore(ttl_s=session_ttl_s, clock=clock)
    app.state.sessions = sessions

    @app.post("/v1/ask", response_model=AskResponse)
    def ask(request: AskRequest) -> AskResponse:
        if request.pipeline not in PIPELINES:
            raise HTTPException(status_code=422, detail=f"unknown pipeline: {request.pipeline}")
        session = sessions.get_or_create(request.session_id)
        question = request.question
        if session.pending_question:
            question = merge_clarification(session.pending_question, request.question)
        try:
            answer = engine.ask(question, request.pipeline)
        except UnknownPipeline as exc:  # defensive; validated above
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        session.pending_question = question if answer.needs_clarification else None
        return AskResponse(
            session_id=session.session_id,
            answer=answer.text,
            pipeline=answer.pipeline,
            category=answer.category,
            needs_clarification=answer.needs_clarification,
            evidence_doc_ids=answer.evidence_doc_ids,
            query_text=answer.query_text,
            flagged_entities=[f.entity for f in answer.flags],
        )

    @app.get("/v1/flights")
    def flights(field: Optional[str] = None, value: Optional[str] = None, limit: int = 50):
        if (field is None) != (value is None):
            raise HTTPException(status_code=422, detail="field and value go together")
        if field is not None:
            try:
                records = lookup(engine.store, field, value or "")
            except UnknownField as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
        else:
            records = engine.store.records
        records = records[: max(0, limit)]
        return {
            "count": len(records),
            "flights": [
                {name: field_to_str(r, name) for name in FIELD_NAMES} for r in records
            ],
        }

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "flights": len(engine.store), "pipelines": list(PIPELINES)}

    return app
