"""HTTP service exposing matching, the review queue, and trace search.

All endpoints live under /v1 and speak the same JSON serialization used on
disk. Error bodies are ``{"code": ..., "message": ...}`` with a documented
closed set of codes: bad_request, bad_mode, bad_status, bad_decision,
not_found, already_decided, provider_unavailable, internal.
"""

from __future__ import annotations

from fractions import Fraction

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .core import VerdictLabel, new_pair
from .errors import (
    AlreadyDecided,
    EmptyTitle,
    NotFound,
    ProviderUnavailable,
    SkuMapError,
)
from .pipeline import (
    REVIEW_APPROVED,
    REVIEW_OVERRIDDEN,
    REVIEW_PENDING,
    MappingMode,
    MatchingEngine,
)

_VALID_STATUSES = (REVIEW_PENDING, REVIEW_APPROVED, REVIEW_OVERRIDDEN)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(engine: MatchingEngine) -> FastAPI:
    app = FastAPI(title="skumap", version="1")
    app.state.engine = engine
    # the review UI is served from a different origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ProviderUnavailable)
    async def _provider_down(request: Request, exc: ProviderUnavailable):
        return _error(502, "provider_unavailable", str(exc))

    @app.exception_handler(SkuMapError)
    async def _engine_error(request: Request, exc: SkuMapError):
        return _error(500, "internal", str(exc))

    @app.post("/v1/match")
    async def match(request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        if not isinstance(body, dict):
            return _error(400, "bad_request", "body must be a JSON object")
        base = body.get("base", "")
        compared = body.get("compared", "")
        mode_raw = body.get("mode", "q2k")
        try:
            mode = MappingMode(mode_raw)
        except ValueError:
            return _error(400, "bad_mode", f"unknown mode {mode_raw!r}")
        try:
            pair = new_pair(base, compared)
        except EmptyTitle as exc:
            return _error(400, "bad_request", str(exc))
        result = engine.map_pair(pair, mode)
        return JSONResponse(result.to_dict())

    @app.get("/v1/review/queue")
    async def review_queue(status: str = REVIEW_PENDING):
        if status not in _VALID_STATUSES:
            return _error(400, "bad_status", f"status must be one of {_VALID_STATUSES}")
        items = engine.queue.list_items(status=status)
        return JSONResponse([i.to_dict() for i in items])

    @app.post("/v1/review/{item_id}")
    async def review_decide(item_id: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return _error(400, "bad_request", "body must be JSON")
        decision = body.get("decision")
        if decision not in ("approve", "override"):
            return _error(400, "bad_decision", f"unknown decision {decision!r}")
        corrected = body.get("corrected_label")
        if decision == "override":
            if corrected is None:
                return _error(400, "bad_request", "override requires corrected_label")
            try:
                corrected = VerdictLabel(corrected)
            except ValueError:
                return _error(400, "bad_request", f"unknown label {corrected!r}")
        else:
            corrected = None
        try:
            item = engine.apply_review(
                item_id, decision, corrected_label=corrected, note=body.get("note")
            )
        except NotFound as exc:
            return _error(404, "not_found", str(exc))
        except AlreadyDecided as exc:
            return _error(409, "already_decided", str(exc))
        return JSONResponse(item.to_dict())

    @app.get("/v1/traces/search")
    async def traces_search(q: str = "", k: int = 5):
        if not q.strip():
            return _error(400, "bad_request", "query q must be non-empty")
        if k < 1:
            return _error(400, "bad_request", "k must be at least 1")
        hits = engine.store.retrieve_topk(q, k)
        return JSONResponse(
            [
                {
                    "trace_id": h.trace.trace_id,
                    "concat_key": h.trace.concat_key,
                    "similarity": h.similarity,
                    "validation_status": h.trace.validation_status,
                    "questions": h.trace.questions.to_dict(),
                    "answers": h.trace.answers.to_dict(),
                    "created_at": h.trace.created_at,
                }
                for h in hits
            ]
        )

    @app.get("/v1/stats")
    async def stats():
        with engine._log_lock:
            records = list(engine.lifetime_log.records)
        n = len(records)
        if n == 0:
            return JSONResponse(
                {
                    "pairs_processed": 0,
                    "dedup_activation_rate": 0.0,
                    "avg_questions_per_pair": 0.0,
                    "escalated": 0,
                }
            )
        dedup = sum(1 for r in records if r.dedup_activated)
        questions = sum(r.questions_generated for r in records)
        return JSONResponse(
            {
                "pairs_processed": n,
                "dedup_activation_rate": float(Fraction(dedup, n)),
                "avg_questions_per_pair": float(Fraction(questions, n)),
                "escalated": sum(1 for r in records if r.escalated),
            }
        )

    return app
