"""JSON-over-HTTP front door: plan adaptation, handbook ingestion, metric
evaluation, and session history.

Sessions are persisted to an append-only JSON-lines log with an in-memory
index rebuilt at startup; handbooks and cassettes are immutable for the
process lifetime.
"""

from __future__ import annotations

import json
import threading
import time
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import motion_eval
from .config import ServiceConfig
from .corpus import (
    CorpusStore,
    DuplicateJurisdiction,
    EmptyHandbook,
    HandbookMeta,
    UnknownJurisdiction,
)
from .llm import Backend, CompletionSettings, LlmError, Timeout, make_backend
from .planner import NewPlan, PlanEmpty, adapt_plan
from .tre import DriverQuery, NoKeywords


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str):
        super().__init__(detail)
        self.status = status
        self.code = code
        self.detail = detail


class AdaptRequest(BaseModel):
    target_jurisdiction: str
    nominal_plan: str
    origin_jurisdiction: str = "california"
    scene_description: str = ""
    unexpected_situation: str = "normal status"
    output_language: str = "en"


class ExcerptOut(BaseModel):
    jurisdiction_id: str
    paragraph_index: int
    matched_keywords: list[str]
    match_spans: list[tuple[int, int]]
    text: str


class AdaptResponse(BaseModel):
    trace_id: str
    instruction: str
    generic: bool
    keywords: list[str]
    excerpts: list[ExcerptOut]
    latency_ms: int


class HandbookIn(BaseModel):
    jurisdiction_id: str
    display_name: str
    language: str = "en"
    source_uri: str | None = None
    text: str


class EvalRequest(BaseModel):
    manifest_path: str | None = None
    samples: list[dict] | None = None
    ego_length: float = motion_eval.DEFAULT_EGO_LENGTH
    ego_width: float = motion_eval.DEFAULT_EGO_WIDTH


class SessionLog:
    """Append-only JSONL session store with an in-memory index."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[str, dict] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    record = json.loads(line)
                    self._index[record["trace_id"]] = record

    def append(self, record: dict) -> None:
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")
            self._index[record["trace_id"]] = record

    def get(self, trace_id: str) -> dict | None:
        return self._index.get(trace_id)


def _excerpt_out(excerpt) -> ExcerptOut:
    return ExcerptOut(
        jurisdiction_id=excerpt.jurisdiction_id,
        paragraph_index=excerpt.paragraph_index,
        matched_keywords=list(excerpt.matched_keywords),
        match_spans=[tuple(span) for span in excerpt.match_spans],
        text=excerpt.text,
    )


def _session_record(plan: NewPlan, latency_ms: int) -> dict:
    query = plan.query
    return {
        "trace_id": plan.trace_id,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "latency_ms": latency_ms,
        "query": {
            "origin_jurisdiction": query.origin_jurisdiction,
            "target_jurisdiction": query.target_jurisdiction,
            "nominal_plan": query.nominal_plan,
            "scene_description": query.scene_description,
            "unexpected_situation": query.unexpected_situation,
            "output_language": query.output_language,
        },
        "tre": {
            "keywords": list(plan.keywords.keywords),
            "no_match": plan.generic,
            "excerpts": [
                _excerpt_out(e).model_dump() for e in plan.cited_excerpts
            ],
        },
        "plan": {
            "instruction": plan.instruction,
            "generic": plan.generic,
        },
    }


def create_app(config: ServiceConfig, backend: Backend | None = None) -> FastAPI:
    """Build the service; an injected backend overrides the configured one
    (used by tests to force failure modes)."""
    app = FastAPI(title="llada", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[config.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    store = CorpusStore(config.corpus_dir)
    if backend is None:
        backend = make_backend(
            mode=config.llm.mode,
            url=config.llm.url,
            api_key=config.llm.api_key,
            cassette_path=config.llm.cassette,
        )
    settings = CompletionSettings(model_id=config.llm.model_id)
    sessions = SessionLog(config.sessions_path)

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"code": exc.code, "detail": exc.detail},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError):
        code = "invalid_request"
        for error in exc.errors():
            if error.get("type") == "missing":
                field_name = ".".join(str(p) for p in error["loc"] if p != "body")
                code = f"missing_field:{field_name}"
                break
        return JSONResponse(
            status_code=400,
            content={"code": code, "detail": str(exc.errors()[:3])},
        )

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/v1/adapt", response_model=AdaptResponse)
    def handle_adapt(body: AdaptRequest) -> AdaptResponse:
        started = time.perf_counter()
        try:
            query = DriverQuery(
                target_jurisdiction=body.target_jurisdiction,
                nominal_plan=body.nominal_plan,
                origin_jurisdiction=body.origin_jurisdiction,
                scene_description=body.scene_description,
                unexpected_situation=body.unexpected_situation,
                output_language=body.output_language,
            )
        except ValueError as exc:
            raise ApiError(400, "invalid_request", str(exc)) from exc
        try:
            plan = adapt_plan(query, store, backend, settings)
        except UnknownJurisdiction as exc:
            raise ApiError(404, "unknown_jurisdiction", str(exc)) from exc
        except Timeout as exc:
            raise ApiError(504, "timeout", str(exc)) from exc
        except (LlmError, NoKeywords, PlanEmpty) as exc:
            raise ApiError(502, "backend_failure", str(exc)) from exc
        latency_ms = int((time.perf_counter() - started) * 1000)
        sessions.append(_session_record(plan, latency_ms))
        return AdaptResponse(
            trace_id=plan.trace_id,
            instruction=plan.instruction,
            generic=plan.generic,
            keywords=list(plan.keywords.keywords),
            excerpts=[_excerpt_out(e) for e in plan.cited_excerpts],
            latency_ms=latency_ms,
        )

    @app.post("/v1/handbooks", status_code=201)
    def handle_ingest(body: HandbookIn):
        try:
            meta = HandbookMeta(
                jurisdiction_id=body.jurisdiction_id,
                display_name=body.display_name,
                language=body.language,
                source_uri=body.source_uri,
            )
            handbook = store.ingest(body.text, meta)
        except DuplicateJurisdiction as exc:
            raise ApiError(409, "duplicate_jurisdiction", str(exc)) from exc
        except (ValueError, EmptyHandbook) as exc:
            raise ApiError(400, "invalid_handbook", str(exc)) from exc
        return {
            "meta": meta.to_dict(),
            "paragraphs": len(handbook.paragraphs),
        }

    @app.get("/v1/handbooks")
    def handle_list_handbooks():
        return {"handbooks": [m.to_dict() for m in store.list_meta()]}

    @app.get("/v1/sessions/{trace_id}")
    def handle_get_session(trace_id: str):
        record = sessions.get(trace_id)
        if record is None:
            raise ApiError(404, "unknown_session", f"no session {trace_id}")
        return record

    @app.post("/v1/eval")
    def handle_eval(body: EvalRequest):
        try:
            if body.manifest_path is not None:
                samples = motion_eval.load_manifest(body.manifest_path)
            elif body.samples is not None:
                samples = [motion_eval.sample_from_dict(d) for d in body.samples]
            else:
                raise ApiError(
                    400, "malformed_eval", "provide manifest_path or samples"
                )
            metrics = motion_eval.evaluate(
                samples, ego_length=body.ego_length, ego_width=body.ego_width
            )
        except ApiError:
            raise
        except (motion_eval.ParseError, motion_eval.EmptySampleSet,
                FileNotFoundError, ValueError) as exc:
            raise ApiError(400, "malformed_eval", str(exc)) from exc
        return metrics.to_dict()

    return app
