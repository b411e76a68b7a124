"""Request/response models for the review service API."""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel


class QueueItemOut(BaseModel):
    doc_id: str
    title: str
    abstract: str
    verdict: str
    confidence: float
    enqueued_at: str


class DecisionIn(BaseModel):
    verdict: Literal["include", "exclude"]
    reviewer_id: Optional[str] = None


class DecisionOut(BaseModel):
    doc_id: str
    verdict: str
    status: str


class DigestOut(BaseModel):
    period: str
    queued: int
    reviewed: int
    auto_included: int
    auto_excluded: int
    tau: float
    pending_human_minutes: float


class ThresholdIn(BaseModel):
    tau: float


class ThresholdOut(BaseModel):
    tau: float
    queued: int


class RetrainOut(BaseModel):
    job_id: str


class ErrorBody(BaseModel):
    code: str
    message: str
