"""HTTP service for the human review queue.

Wraps a project store: uncertain documents are served worst-first, human
verdicts flow back in, retraining swaps the screening model atomically, and
the digest summarizes outstanding work.  Errors use {code, message} JSON.
"""
from __future__ import annotations

from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import triage
from ..store import ProjectStore, STATUS_SCREENED_IN, STATUS_SCREENED_OUT
from .schemas import (
    DecisionIn,
    DecisionOut,
    DigestOut,
    QueueItemOut,
    RetrainOut,
    ThresholdIn,
    ThresholdOut,
)

REVIEW_MINUTES_PER_100 = 20.0


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code
        self.message = message


def _error(status_code: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status_code, content={"code": code, "message": message})


def create_app(store: ProjectStore) -> FastAPI:
    app = FastAPI(title="review service")

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError) -> JSONResponse:
        return _error(exc.status_code, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def handle_validation(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error(400, "bad_request", str(exc.errors()))

    @app.get("/queue", response_model=list[QueueItemOut])
    def get_queue(limit: Optional[str] = None, offset: str = "0") -> list[QueueItemOut]:
        try:
            limit_n = None if limit is None else int(limit)
            offset_n = int(offset)
            if offset_n < 0 or (limit_n is not None and limit_n < 0):
                raise ValueError("negative pagination")
        except ValueError as exc:
            raise ApiError(400, "bad_request", f"malformed pagination: {exc}") from exc
        items = store.queue(limit=limit_n, offset=offset_n)
        return [
            QueueItemOut(
                doc_id=doc.doc_id,
                title=doc.title,
                abstract=doc.abstract,
                verdict=pred.verdict,
                confidence=pred.confidence,
                enqueued_at=pred.scored_at,
            )
            for doc, pred in items
        ]

    @app.post("/queue/{doc_id}/decision", response_model=DecisionOut)
    def post_decision(doc_id: str, body: DecisionIn) -> DecisionOut:
        try:
            doc = store.get_document(doc_id)
        except Exception as exc:
            raise ApiError(404, "not_found", f"no document {doc_id!r}") from exc
        if doc.status != "needs_review":
            previous = store.active_human_decision(doc_id)
            if previous is not None and previous.verdict == body.verdict \
                    and previous.reviewer_id == body.reviewer_id:
                return DecisionOut(doc_id=doc_id, verdict=body.verdict, status=doc.status)
            raise ApiError(409, "conflict", f"document {doc_id!r} is not awaiting review")
        triage.record_human_decision(store, doc_id, body.verdict, body.reviewer_id)
        return DecisionOut(doc_id=doc_id, verdict=body.verdict,
                           status=store.get_document(doc_id).status)

    @app.get("/stats", response_model=DigestOut)
    def get_stats() -> DigestOut:
        queued = len(store.queue())
        reviewed = len(store.labeled_docs())
        auto_included = auto_excluded = 0
        for doc in store.list_documents():
            if store.active_human_decision(doc.doc_id) is not None:
                continue
            pred = store.get_prediction(doc.doc_id)
            if pred is None or pred.route != "auto":
                continue
            if doc.status == STATUS_SCREENED_IN:
                auto_included += 1
            elif doc.status == STATUS_SCREENED_OUT:
                auto_excluded += 1
        now = datetime.now(timezone.utc)
        iso = now.isocalendar()
        return DigestOut(
            period=f"{iso.year}-W{iso.week:02d}",
            queued=queued,
            reviewed=reviewed,
            auto_included=auto_included,
            auto_excluded=auto_excluded,
            tau=triage.get_tau(store),
            pending_human_minutes=REVIEW_MINUTES_PER_100 * queued / 100.0,
        )

    @app.post("/retrain", response_model=RetrainOut)
    def post_retrain() -> RetrainOut:
        try:
            version = triage.retrain(store)
        except triage.TriageError as exc:
            raise ApiError(409, "conflict", str(exc)) from exc
        return RetrainOut(job_id=version)

    @app.put("/config/threshold", response_model=ThresholdOut)
    def put_threshold(body: ThresholdIn) -> ThresholdOut:
        if not 0.5 <= body.tau <= 1.0:
            raise ApiError(400, "bad_request", f"threshold {body.tau} outside [0.5, 1.0]")
        queued = triage.reroute_for_threshold(store, body.tau)
        return ThresholdOut(tau=body.tau, queued=queued)

    return app
