"""Connects screening models to the project store: scoring, routing, retraining.

The confidence threshold lives in store config; documents without a human
decision are routed by their latest model prediction, so changing the
threshold re-partitions the queue without touching any human verdict.
"""
from __future__ import annotations

import logging
from typing import Optional

from . import screen
from .store import (
    STATUS_CONVERTED,
    STATUS_FETCHED,
    STATUS_FOUND,
    STATUS_NEEDS_REVIEW,
    STATUS_SCREENED_IN,
    STATUS_SCREENED_OUT,
    Decision,
    DocumentFilter,
    Prediction,
    ProjectStore,
)

logger = logging.getLogger(__name__)

TAU_KEY = "tau"
RETRAIN_MARKER_KEY = "retrain_marker"
DEFAULT_TAU = 0.75
MODEL_KIND = "screen"

_UNSCREENED = (STATUS_FOUND, STATUS_FETCHED, STATUS_CONVERTED)
_SCREENING = (STATUS_SCREENED_IN, STATUS_SCREENED_OUT, STATUS_NEEDS_REVIEW)


class TriageError(Exception):
    pass


def get_tau(store: ProjectStore) -> float:
    return float(store.get_config(TAU_KEY, str(DEFAULT_TAU)))


def set_tau(store: ProjectStore, tau: float) -> None:
    if not 0.5 <= tau <= 1.0:
        raise TriageError(f"threshold {tau} outside [0.5, 1.0]")
    store.set_config(TAU_KEY, repr(tau))


def load_active_model(store: ProjectStore) -> Optional[tuple[str, screen.ScreeningModel]]:
    found = store.active_model(MODEL_KIND)
    if found is None:
        return None
    version, payload = found
    return version, screen.loads_model(payload)


def install_model(store: ProjectStore, model: screen.ScreeningModel) -> str:
    """Persist a model and atomically make it the active screening model."""
    return store.save_model(MODEL_KIND, screen.dumps_model(model), activate=True)


def _apply_prediction(store: ProjectStore, version: str, pred: screen.Prediction) -> None:
    store.record_prediction(Prediction(
        doc_id=pred.doc_id,
        model_version=version,
        p_include=pred.p_include,
        verdict=pred.verdict,
        confidence=pred.confidence,
        route=pred.route,
    ))
    if pred.route == "auto":
        store.record_decision(Decision(
            doc_id=pred.doc_id, verdict=pred.verdict, origin="model",
            confidence=pred.confidence,
        ))
    else:
        store.set_status(pred.doc_id, STATUS_NEEDS_REVIEW)


def screen_pending(store: ProjectStore, model: screen.ScreeningModel, version: str) -> int:
    """Score every not-yet-screened document and route it; returns the count."""
    model = _with_tau(model, get_tau(store))
    docs = store.list_documents(DocumentFilter(status_in=_UNSCREENED))
    for doc in docs:
        pred = screen.classify(model, doc.title, doc.abstract, doc.doc_id)
        _apply_prediction(store, version, pred)
    return len(docs)


def _with_tau(model: screen.ScreeningModel, tau: float) -> screen.ScreeningModel:
    model.tau = tau
    return model


def reroute_for_threshold(store: ProjectStore, tau: float) -> int:
    """Re-partition model-routed documents under a new threshold.

    Queued documents whose stored confidence now clears the threshold get an
    automatic decision; auto-decided documents without a human verdict whose
    confidence falls below it return to the queue.  Returns the queue size.
    """
    set_tau(store, tau)
    for doc in store.list_documents(DocumentFilter(status_in=_SCREENING)):
        if store.active_human_decision(doc.doc_id) is not None:
            continue
        pred = store.get_prediction(doc.doc_id)
        if pred is None:
            continue
        route = "needs_review" if pred.confidence < tau else "auto"
        if route != pred.route:
            pred.route = route
            store.record_prediction(pred)
        if route == "needs_review" and doc.status != STATUS_NEEDS_REVIEW:
            store.supersede_model_decisions(doc.doc_id)
            store.set_status(doc.doc_id, STATUS_NEEDS_REVIEW, force_reroute=True)
        elif route == "auto" and doc.status == STATUS_NEEDS_REVIEW:
            store.record_decision(Decision(
                doc_id=doc.doc_id, verdict=pred.verdict, origin="model",
                confidence=pred.confidence,
            ))
    return len(store.queue())


def record_human_decision(
    store: ProjectStore, doc_id: str, verdict: str, reviewer_id: Optional[str]
) -> None:
    store.record_decision(Decision(
        doc_id=doc_id, verdict=verdict, origin="human", reviewer_id=reviewer_id,
    ))


def new_human_decisions(store: ProjectStore) -> int:
    marker = int(store.get_config(RETRAIN_MARKER_KEY, "0"))
    return max(0, store.max_human_decision_id() - marker)


def mark_retrained(store: ProjectStore) -> None:
    store.set_config(RETRAIN_MARKER_KEY, str(store.max_human_decision_id()))


def retrain(
    store: ProjectStore,
    lam: float = screen.DEFAULT_LAMBDA,
    epochs: int = screen.DEFAULT_EPOCHS,
    seed: int = 0,
) -> str:
    """Snapshot current labels, train and swap in a new model, re-score the queue.

    Raises TriageError when no new human decisions arrived since the last
    retrain, or when the labeled set cannot train a two-class model.
    """
    if new_human_decisions(store) == 0:
        raise TriageError("no new human decisions since the last retrain")
    snapshot = store.snapshot_training_set(description="retrain")
    titles, abstracts, labels = [], [], []
    for doc_id, label in snapshot.members:
        doc = store.get_document(doc_id)
        titles.append(doc.title)
        abstracts.append(doc.abstract)
        labels.append(label)
    tau = get_tau(store)
    try:
        model = screen.train_screening_model(
            titles, abstracts, labels, lam=lam, epochs=epochs, seed=seed, tau=tau,
            metadata={"snapshot_id": snapshot.snapshot_id},
        )
    except screen.ScreenError as exc:
        raise TriageError(f"cannot retrain: {exc}") from exc
    version = install_model(store, model)
    # re-score only documents still awaiting review
    for doc, _ in store.queue():
        pred = screen.classify(model, doc.title, doc.abstract, doc.doc_id)
        _apply_prediction(store, version, pred)
    mark_retrained(store)
    logger.info("retrained %s on snapshot %s", version, snapshot.snapshot_id)
    return version
