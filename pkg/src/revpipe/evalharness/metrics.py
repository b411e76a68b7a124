"""Screening metrics, ranking AUC, and span-level P/R/F1."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from ..extract.bio import SpanAnnotation
from ..extract.schema import LABELS, PRIORITY_LABELS


class MetricsError(Exception):
    pass


@dataclass
class ScreenMetrics:
    """Accuracy overall; precision/recall/F1 on the include class."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    n_include: int
    n_exclude: int

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "n_include": self.n_include,
            "n_exclude": self.n_exclude,
        }


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def screen_metrics(preds: Sequence[str], gold: Sequence[str]) -> ScreenMetrics:
    if len(preds) != len(gold):
        raise MetricsError(f"{len(preds)} predictions vs {len(gold)} gold labels")
    if not preds:
        raise MetricsError("empty prediction set")
    tp = sum(1 for p, g in zip(preds, gold) if p == "include" and g == "include")
    fp = sum(1 for p, g in zip(preds, gold) if p == "include" and g == "exclude")
    fn = sum(1 for p, g in zip(preds, gold) if p == "exclude" and g == "include")
    tn = len(preds) - tp - fp - fn
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return ScreenMetrics(
        accuracy=(tp + tn) / len(preds),
        precision=precision,
        recall=recall,
        f1=_f1(precision, recall),
        n_include=tp + fn,
        n_exclude=fp + tn,
    )


def auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Rank-based AUC: correctly ordered positive/negative pairs, ties half.

    Computed from average ranks (Mann-Whitney), which equals pair counting.
    """
    if len(scores) != len(labels):
        raise MetricsError("scores and labels must be parallel")
    n_pos = sum(1 for y in labels if y == 1)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricsError("AUC needs both classes")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0  # 1-based average rank for the tie block
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    rank_sum = sum(r for r, y in zip(ranks, labels) if y == 1)
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


@dataclass
class LabelPRF:
    precision: float
    recall: float
    f1: float
    gold_count: int
    pred_count: int


@dataclass
class SpanScores:
    per_label: dict[str, LabelPRF]
    mean_f1: Optional[float]
    mean_precision: Optional[float]
    mean_recall: Optional[float]
    priority_mean_f1: Optional[float]

    def to_json(self) -> dict:
        return {
            "per_label": {
                k: {"precision": v.precision, "recall": v.recall, "f1": v.f1,
                    "gold_count": v.gold_count, "pred_count": v.pred_count}
                for k, v in self.per_label.items()
            },
            "mean_f1": self.mean_f1,
            "mean_precision": self.mean_precision,
            "mean_recall": self.mean_recall,
            "priority_mean_f1": self.priority_mean_f1,
        }


def _token_label_sets(spans: Sequence[SpanAnnotation]) -> dict[tuple[str, str], set[int]]:
    out: dict[tuple[str, str], set[int]] = {}
    for s in spans:
        out.setdefault((s.unit_id, s.label), set()).update(range(s.start, s.end))
    return out


def span_f1(
    pred: Sequence[SpanAnnotation],
    gold: Sequence[SpanAnnotation],
    mode: str = "exact",
) -> SpanScores:
    """Per-label and macro P/R/F1 over spans.

    exact mode: a prediction is correct iff unit, label and both boundaries
    match a gold span.  token mode: per-token comparison of label coverage.
    Macro means run over labels with at least one gold instance; the
    priority mean restricts further to the expert-priority subset.
    """
    if mode not in ("exact", "token"):
        raise MetricsError(f"unknown span F1 mode {mode!r}")
    per_label: dict[str, LabelPRF] = {}
    for label in LABELS:
        gold_l = [s for s in gold if s.label == label]
        pred_l = [s for s in pred if s.label == label]
        if mode == "exact":
            gold_keys = {s.key() for s in gold_l}
            pred_keys = {s.key() for s in pred_l}
            tp = len(gold_keys & pred_keys)
            fp = len(pred_keys - gold_keys)
            fn = len(gold_keys - pred_keys)
            gold_count, pred_count = len(gold_keys), len(pred_keys)
        else:
            gold_toks = _token_label_sets(gold_l)
            pred_toks = _token_label_sets(pred_l)
            tp = fp = fn = 0
            for key in set(gold_toks) | set(pred_toks):
                g = gold_toks.get(key, set())
                p = pred_toks.get(key, set())
                tp += len(g & p)
                fp += len(p - g)
                fn += len(g - p)
            gold_count = sum(len(v) for v in gold_toks.values())
            pred_count = sum(len(v) for v in pred_toks.values())
        if gold_count == 0 and pred_count == 0:
            continue
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        per_label[label] = LabelPRF(
            precision=precision, recall=recall, f1=_f1(precision, recall),
            gold_count=gold_count, pred_count=pred_count,
        )

    scored = {k: v for k, v in per_label.items() if v.gold_count > 0}
    prio = {k: v for k, v in scored.items() if k in PRIORITY_LABELS}

    def mean(vals: list[float]) -> Optional[float]:
        return sum(vals) / len(vals) if vals else None

    return SpanScores(
        per_label=per_label,
        mean_f1=mean([v.f1 for v in scored.values()]),
        mean_precision=mean([v.precision for v in scored.values()]),
        mean_recall=mean([v.recall for v in scored.values()]),
        priority_mean_f1=mean([v.f1 for v in prio.values()]),
    )
