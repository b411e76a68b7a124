"""Experiment protocols: data-volume ablations, country holdout, threshold sweeps.

Each run yields CurvePoint records (one per grid position per seed) that
serialize to CSV rows and plot-data JSON; aggregation reports mean and
sample standard deviation across seeds.
"""
from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from ..screen import ScreeningModel, classify, review_fraction, train_screening_model
from .metrics import MetricsError, auc, screen_metrics

DEFAULT_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
TEST_FRACTION = 0.15
REVIEW_MINUTES_PER_100 = 20.0


@dataclass
class LabeledExample:
    doc_id: str
    title: str
    abstract: str
    label: str  # include | exclude
    country: Optional[str] = None


@dataclass
class CurvePoint:
    x: float  # training fraction or threshold
    seed: int
    metrics: dict = field(default_factory=dict)
    converged: bool = True
    group: str = ""  # e.g. the held-out country

    def to_json(self) -> dict:
        return {"x": self.x, "seed": self.seed, "metrics": self.metrics,
                "converged": self.converged, "group": self.group}


def stratified_split(
    examples: Sequence[LabeledExample], test_fraction: float, seed: int
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Label-stratified train/test split, deterministic for a given seed."""
    rng = random.Random(seed)
    train: list[LabeledExample] = []
    test: list[LabeledExample] = []
    for label in ("include", "exclude"):
        bucket = [e for e in examples if e.label == label]
        rng.shuffle(bucket)
        n_test = int(round(len(bucket) * test_fraction))
        test.extend(bucket[:n_test])
        train.extend(bucket[n_test:])
    return train, test


def _train_and_eval(
    train: Sequence[LabeledExample],
    test: Sequence[LabeledExample],
    seed: int,
    lam: float,
    epochs: int,
) -> dict:
    model = train_screening_model(
        [e.title for e in train],
        [e.abstract for e in train],
        [e.label for e in train],
        lam=lam, epochs=epochs, seed=seed,
    )
    preds = [classify(model, e.title, e.abstract, e.doc_id) for e in test]
    m = screen_metrics([p.verdict for p in preds], [e.label for e in test])
    bundle = m.to_json()
    gold_binary = [1 if e.label == "include" else 0 for e in test]
    if 0 < sum(gold_binary) < len(gold_binary):
        bundle["auc"] = auc([p.p_include for p in preds], gold_binary)
    bundle["n_train"] = len(train)
    bundle["n_test"] = len(test)
    return bundle


def _has_both_classes(examples: Sequence[LabeledExample]) -> bool:
    labels = {e.label for e in examples}
    return "include" in labels and "exclude" in labels


def ablate_volume(
    examples: Sequence[LabeledExample],
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    split_seed: int = 0,
    lam: float = 1e-4,
    epochs: int = 20,
    test: Optional[Sequence[LabeledExample]] = None,
) -> list[CurvePoint]:
    """Screening performance over nested training subsets.

    The test split (15%, stratified) is fixed across fractions and seeds.
    Per seed, the training order is shuffled once and fraction subsets are
    prefixes of it, so the 20% set is contained in the 40% set and so on.
    Single-class subsets are flagged as non-converged, never dropped.
    """
    if test is None:
        train_pool, test_set = stratified_split(examples, TEST_FRACTION, split_seed)
    else:
        train_pool, test_set = list(examples), list(test)
    if not _has_both_classes(test_set):
        raise MetricsError("test split lacks one of the classes; enlarge the corpus")
    points: list[CurvePoint] = []
    for seed in seeds:
        order = list(train_pool)
        random.Random(seed).shuffle(order)
        for fraction in fractions:
            n = max(1, int(round(fraction * len(order))))
            subset = order[:n]
            if not _has_both_classes(subset):
                points.append(CurvePoint(x=fraction, seed=seed, converged=False,
                                         metrics={"n_train": len(subset)}))
                continue
            bundle = _train_and_eval(subset, test_set, seed, lam, epochs)
            points.append(CurvePoint(x=fraction, seed=seed, metrics=bundle))
    return points


def holdout_country(
    examples: Sequence[LabeledExample],
    fractions: Sequence[float] = (1.0,),
    seeds: Sequence[int] = DEFAULT_SEEDS,
    lam: float = 1e-4,
    epochs: int = 20,
) -> list[CurvePoint]:
    """One run per held-out country: train on the rest, test on it.

    Supports the volume ablation nested inside via ``fractions``.  Countries
    whose data is single-class yield flagged (non-converged) points.
    """
    if any(e.country is None for e in examples):
        raise MetricsError("country field missing on some examples")
    countries = sorted({e.country for e in examples if e.country})
    usable = [c for c in countries if _has_both_classes([e for e in examples if e.country == c])]
    if len(usable) < 2:
        raise MetricsError("need at least two countries with both classes")
    points: list[CurvePoint] = []
    for country in countries:
        test_set = [e for e in examples if e.country == country]
        train_pool = [e for e in examples if e.country != country]
        if not _has_both_classes(test_set) or not _has_both_classes(train_pool):
            points.append(CurvePoint(x=1.0, seed=-1, converged=False, group=country))
            continue
        for seed in seeds:
            order = list(train_pool)
            random.Random(seed).shuffle(order)
            for fraction in fractions:
                n = max(1, int(round(fraction * len(order))))
                subset = order[:n]
                if not _has_both_classes(subset):
                    points.append(CurvePoint(x=fraction, seed=seed, converged=False,
                                             group=country, metrics={"n_train": len(subset)}))
                    continue
                bundle = _train_and_eval(subset, test_set, seed, lam, epochs)
                points.append(CurvePoint(x=fraction, seed=seed, metrics=bundle, group=country))
    return points


def threshold_sweep(
    model: ScreeningModel,
    examples: Sequence[LabeledExample],
    taus: Sequence[float] = tuple(round(0.5 + 0.05 * i, 2) for i in range(11)),
) -> list[CurvePoint]:
    """Review load and accuracy per threshold.

    Reports, per tau: the review fraction, accuracy over automatically
    decided documents, combined accuracy assuming reviewed documents are
    decided correctly by the human, and the review time estimate at 20
    minutes per 100 documents.
    """
    preds = [classify(model, e.title, e.abstract, e.doc_id) for e in examples]
    gold = [e.label for e in examples]
    confidences = [p.confidence for p in preds]
    points = []
    for tau in taus:
        reviewed = [i for i, c in enumerate(confidences) if c < tau]
        auto = [i for i, c in enumerate(confidences) if c >= tau]
        frac = review_fraction(confidences, tau)
        auto_correct = sum(1 for i in auto if preds[i].verdict == gold[i])
        auto_accuracy = auto_correct / len(auto) if auto else None
        combined = (auto_correct + len(reviewed)) / len(preds) if preds else None
        points.append(CurvePoint(x=tau, seed=0, metrics={
            "review_fraction": frac,
            "auto_accuracy": auto_accuracy,
            "combined_accuracy": combined,
            "n_reviewed": len(reviewed),
            "human_minutes": REVIEW_MINUTES_PER_100 * len(reviewed) / 100.0,
        }))
    return points


def summarize(points: Sequence[CurvePoint], metric: str) -> dict[tuple[float, str], dict]:
    """Mean and sample stdev of one metric across seeds, keyed by (x, group)."""
    buckets: dict[tuple[float, str], list[float]] = {}
    for p in points:
        if not p.converged or metric not in p.metrics or p.metrics[metric] is None:
            continue
        buckets.setdefault((p.x, p.group), []).append(p.metrics[metric])
    out = {}
    for key in sorted(buckets):
        vals = buckets[key]
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1) if len(vals) > 1 else 0.0
        out[key] = {"mean": mean, "stdev": math.sqrt(var), "n": len(vals)}
    return out


def write_points_csv(points: Sequence[CurvePoint], path: str | Path) -> None:
    metric_keys = sorted({k for p in points for k in p.metrics})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "seed", "group", "converged", *metric_keys])
        for p in sorted(points, key=lambda q: (q.group, q.x, q.seed)):
            row = [p.x, p.seed, p.group, int(p.converged)]
            row.extend("" if p.metrics.get(k) is None else p.metrics.get(k, "") for k in metric_keys)
            writer.writerow(row)


def write_plot_json(points: Sequence[CurvePoint], path: str | Path) -> None:
    Path(path).write_text(
        json.dumps({"points": [p.to_json() for p in points]}, indent=2),
        encoding="utf-8",
    )
