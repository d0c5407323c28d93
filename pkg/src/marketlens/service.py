"""HTTP surface: chat sessions, ingest runs, charts, stats, health.

Sessions and charts are persisted as JSON files under the state directory,
so replaying GETs after a restart returns identical bodies. Message
handling is synchronous; the turn JSON is the single source of truth.

All error bodies share one shape: ``{"error": {"code": ..., "message": ...}}``.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .agent import AgentSession, ToolRegistry, run_react, turn_to_dict
from .datastore import JobStore
from .errors import MarketLensError, SourceError, StorageError
from .ingestion import SourceSpec
from .pipeline import PipelineReport
from .providers import ChatProvider
from .toolbox import ChartSpec

__all__ = ["SessionStore", "ChartStore", "create_app"]


def _error_body(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


class SessionStore:
    """One JSON file per session: {session_id, created_at, turns: [...]}."""

    def __init__(self, state_dir: str | Path):
        self.directory = Path(state_dir) / "sessions"
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.json"

    def create(self) -> dict:
        session_id = uuid.uuid4().hex
        record = {
            "session_id": session_id,
            "created_at": datetime.now(timezone.utc).isoformat(),
            "turns": [],
        }
        try:
            self._path(session_id).write_text(json.dumps(record), encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot persist session: {exc}") from exc
        return record

    def get(self, session_id: str) -> dict | None:
        path = self._path(session_id)
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def append_turn(self, session_id: str, turn: dict) -> None:
        record = self.get(session_id)
        if record is None:
            raise StorageError(f"unknown session {session_id}")
        record["turns"].append(turn)
        self._path(session_id).write_text(json.dumps(record), encoding="utf-8")


class ChartStore:
    """One JSON file per chart, keyed by content-derived chart id."""

    def __init__(self, state_dir: str | Path):
        self.directory = Path(state_dir) / "charts"
        self.directory.mkdir(parents=True, exist_ok=True)

    def save(self, spec: ChartSpec) -> None:
        path = self.directory / f"{spec.chart_id}.json"
        path.write_text(json.dumps(spec.to_dict(), ensure_ascii=False), encoding="utf-8")

    def get(self, chart_id: str) -> dict | None:
        if not chart_id or "/" in chart_id or "\\" in chart_id or ".." in chart_id:
            return None
        path = self.directory / f"{chart_id}.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))


@dataclass
class _AppState:
    store: JobStore
    registry: ToolRegistry
    chat: ChatProvider
    sessions: SessionStore
    charts: ChartStore
    run_pipeline: Callable[[SourceSpec], PipelineReport] | None
    max_steps: int
    pipeline_lock: threading.Lock


def create_app(
    store: JobStore,
    registry: ToolRegistry,
    chat: ChatProvider,
    state_dir: str | Path,
    pipeline_runner: Callable[[SourceSpec], PipelineReport] | None = None,
    max_steps: int = 8,
    cors_origins: tuple[str, ...] = (),
) -> FastAPI:
    app = FastAPI(title="marketlens", docs_url=None, redoc_url=None)
    state = _AppState(
        store=store,
        registry=registry,
        chat=chat,
        sessions=SessionStore(state_dir),
        charts=ChartStore(state_dir),
        run_pipeline=pipeline_runner,
        max_steps=max_steps,
        pipeline_lock=threading.Lock(),
    )
    app.state.marketlens = state

    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(MarketLensError)
    async def _domain_error(_request: Request, exc: MarketLensError):
        return JSONResponse(status_code=500, content=_error_body("internal", str(exc)))

    @app.exception_handler(Exception)
    async def _unexpected_error(_request: Request, exc: Exception):
        return JSONResponse(status_code=500, content=_error_body("internal", str(exc)))

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.get("/api/stats")
    async def stats():
        return state.store.stats()

    @app.post("/api/sessions", status_code=201)
    async def create_session():
        try:
            record = state.sessions.create()
        except StorageError as exc:
            return JSONResponse(status_code=500, content=_error_body("storage", str(exc)))
        return {"session_id": record["session_id"]}

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str):
        record = state.sessions.get(session_id)
        if record is None:
            return JSONResponse(
                status_code=404, content=_error_body("unknown_session", session_id)
            )
        return record

    @app.post("/api/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        record = state.sessions.get(session_id)
        if record is None:
            return JSONResponse(
                status_code=404, content=_error_body("unknown_session", session_id)
            )
        try:
            body = await request.json()
        except Exception:
            body = None
        message = (body or {}).get("message") if isinstance(body, dict) else None
        if not isinstance(message, str) or not message.strip():
            return JSONResponse(
                status_code=422,
                content=_error_body("empty_message", "body must carry a non-empty 'message'"),
            )

        with state.sessions.lock_for(session_id):
            record = state.sessions.get(session_id)
            history = [(t["user_message"], t["final_answer"]) for t in record["turns"]]
            session = AgentSession(session_id=session_id, history=history)
            turn = run_react(
                session, message, state.registry, state.chat, max_steps=state.max_steps
            )
            for chart in turn.charts:
                state.charts.save(chart)
            turn_dict = turn_to_dict(turn)
            state.sessions.append_turn(session_id, turn_dict)
        return turn_dict

    @app.get("/api/charts/{chart_id}")
    async def get_chart(chart_id: str):
        spec = state.charts.get(chart_id)
        if spec is None:
            return JSONResponse(status_code=404, content=_error_body("unknown_chart", chart_id))
        return spec

    @app.post("/api/ingest")
    async def run_ingest(request: Request):
        if state.run_pipeline is None:
            return JSONResponse(
                status_code=400,
                content=_error_body("no_pipeline", "this server has no pipeline configured"),
            )
        try:
            body = await request.json()
        except Exception:
            body = None
        source_spec = (body or {}).get("source") if isinstance(body, dict) else None
        if not isinstance(source_spec, dict):
            return JSONResponse(
                status_code=400,
                content=_error_body("invalid_source", "body must carry a 'source' object"),
            )
        try:
            source = SourceSpec(
                kind=source_spec.get("kind", ""),
                locator=source_spec.get("locator", ""),
                content_type_hint=source_spec.get("content_type_hint"),
            )
        except ValueError as exc:
            return JSONResponse(status_code=400, content=_error_body("invalid_source", str(exc)))

        if not state.pipeline_lock.acquire(blocking=False):
            return JSONResponse(
                status_code=409,
                content=_error_body("pipeline_busy", "an ingest run is already in progress"),
            )
        try:
            report = state.run_pipeline(source)
        except SourceError as exc:
            return JSONResponse(status_code=400, content=_error_body("invalid_source", str(exc)))
        finally:
            state.pipeline_lock.release()
        return {
            "ingest": {
                "fetched": report.ingest.fetched,
                "stored": report.ingest.stored,
                "duplicates_skipped": report.ingest.duplicates_skipped,
                "failures": [list(f) for f in report.ingest.failures],
            },
            "pipeline": report.summary(),
        }

    return app
