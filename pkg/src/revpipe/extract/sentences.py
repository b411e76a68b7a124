"""Per-label sentence classifiers: does this sentence carry a given target?

One independent L2-regularized logistic model per schema label over
unigram+bigram presence features.  Labels without both a positive and a
negative training example are skipped (reported, never silently trained).
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..docproc import token_strings
from .schema import LABELS

logger = logging.getLogger(__name__)

SENT_HEADER = "revpipe-sent-v1"
DEFAULT_L2 = 1e-3
DEFAULT_EPOCHS = 200


class SentenceModelError(Exception):
    pass


@dataclass
class LabeledSentence:
    unit_id: str
    text: str
    labels: frozenset[str] = frozenset()

    def to_json(self) -> dict:
        return {"unit_id": self.unit_id, "text": self.text, "labels": sorted(self.labels)}

    @classmethod
    def from_json(cls, obj: dict) -> "LabeledSentence":
        labels = frozenset(obj.get("labels", []))
        unknown = labels - set(LABELS)
        if unknown:
            raise SentenceModelError(f"labels outside the schema: {sorted(unknown)}")
        return cls(unit_id=obj["unit_id"], text=obj["text"], labels=labels)


def write_sentence_corpus(path: str | Path, sentences: Sequence[LabeledSentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            fh.write(json.dumps(s.to_json(), ensure_ascii=False) + "\n")


def read_sentence_corpus(path: str | Path) -> list[LabeledSentence]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(LabeledSentence.from_json(json.loads(line)))
    return out


def sentence_features(text: str) -> set[str]:
    """Presence features: lowercased unigrams and adjacent bigrams."""
    toks = [t.lower() for t in token_strings(text)]
    feats = {f"u={t}" for t in toks}
    feats.update(f"b={a} {b}" for a, b in zip(toks, toks[1:]))
    return feats


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-min(z, 500.0)))
    ez = math.exp(max(z, -500.0))
    return ez / (1.0 + ez)


@dataclass
class SentenceClassifier:
    """One-vs-rest logistic models sharing a single feature index."""

    feature_index: dict[str, int]
    weights: dict[str, np.ndarray]  # label -> weight vector
    biases: dict[str, float]
    skipped: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)

    @property
    def trained_labels(self) -> tuple[str, ...]:
        return tuple(sorted(self.weights))

    def _vector_ids(self, text: str) -> list[int]:
        ids = []
        for feat in sentence_features(text):
            fid = self.feature_index.get(feat)
            if fid is not None:
                ids.append(fid)
        return sorted(ids)

    def predict(self, text: str) -> dict[str, float]:
        """Probability per trained label; untrained labels are absent."""
        ids = self._vector_ids(text)
        out = {}
        for label in self.weights:
            w = self.weights[label]
            z = self.biases[label] + float(sum(w[i] for i in ids))
            out[label] = _sigmoid(z)
        return out

    def to_json(self) -> dict:
        return {
            "feature_index": self.feature_index,
            "weights": {k: v.tolist() for k, v in self.weights.items()},
            "biases": self.biases,
            "skipped": list(self.skipped),
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SentenceClassifier":
        return cls(
            feature_index=obj["feature_index"],
            weights={k: np.asarray(v, dtype=float) for k, v in obj["weights"].items()},
            biases=obj["biases"],
            skipped=tuple(obj.get("skipped", ())),
            metadata=obj.get("metadata", {}),
        )


def save_sentence_model(model: SentenceClassifier, path: str | Path) -> None:
    Path(path).write_text(SENT_HEADER + "\n" + json.dumps(model.to_json()), encoding="utf-8")


def load_sentence_model(path: str | Path) -> SentenceClassifier:
    text = Path(path).read_text(encoding="utf-8")
    header, _, body = text.partition("\n")
    if header.strip() != SENT_HEADER:
        raise SentenceModelError(f"not a sentence model artifact (header {header!r})")
    return SentenceClassifier.from_json(json.loads(body))


def _train_logistic(
    rows: list[list[int]],
    targets: np.ndarray,
    dim: int,
    l2: float,
    epochs: int,
) -> tuple[np.ndarray, float]:
    """Full-batch gradient descent with backtracking on logistic loss."""
    w = np.zeros(dim)
    b = 0.0
    n = len(rows)

    def loss_grad(wv: np.ndarray, bv: float):
        z = np.array([bv + sum(wv[i] for i in row) for row in rows])
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        eps = 1e-12
        nll = -float(np.mean(targets * np.log(p + eps) + (1 - targets) * np.log(1 - p + eps)))
        gz = (p - targets) / n
        gw = np.zeros(dim)
        for row, g in zip(rows, gz):
            for i in row:
                gw[i] += g
        gb = float(np.sum(gz))
        return nll + 0.5 * l2 * float(np.dot(wv, wv)), gw + l2 * wv, gb

    obj, gw, gb = loss_grad(w, b)
    step = 1.0
    for _ in range(epochs):
        accepted = False
        for _ in range(30):
            tw, tb = w - step * gw, b - step * gb
            t_obj, t_gw, t_gb = loss_grad(tw, tb)
            if t_obj <= obj + 1e-12:
                w, b, obj, gw, gb = tw, tb, t_obj, t_gw, t_gb
                step *= 1.2
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
    return w, b


def train_sentence_classifier(
    sentences: Sequence[LabeledSentence],
    l2: float = DEFAULT_L2,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    labels: Sequence[str] = LABELS,
) -> SentenceClassifier:
    """Fit one binary model per label that has both classes present."""
    if not sentences:
        raise SentenceModelError("no training sentences")
    feature_index: dict[str, int] = {}
    rows: list[list[int]] = []
    for s in sentences:
        ids = []
        for feat in sorted(sentence_features(s.text)):
            if feat not in feature_index:
                feature_index[feat] = len(feature_index)
            ids.append(feature_index[feat])
        rows.append(ids)
    dim = len(feature_index)

    weights: dict[str, np.ndarray] = {}
    biases: dict[str, float] = {}
    skipped: list[str] = []
    for label in labels:
        targets = np.array([1.0 if label in s.labels else 0.0 for s in sentences])
        pos = int(targets.sum())
        if pos == 0 or pos == len(sentences):
            skipped.append(label)
            logger.warning(
                "label %r skipped: needs both positive and negative examples (%d/%d positive)",
                label, pos, len(sentences),
            )
            continue
        w, b = _train_logistic(rows, targets, dim, l2, epochs)
        weights[label] = w
        biases[label] = b
    if not weights:
        raise SentenceModelError("no label had both classes; nothing to train")
    return SentenceClassifier(
        feature_index=feature_index,
        weights=weights,
        biases=biases,
        skipped=tuple(skipped),
        metadata={"l2": l2, "epochs": epochs, "seed": seed, "n_sentences": len(sentences)},
    )


def predict_sentence_labels(model: SentenceClassifier, text: str) -> dict[str, float]:
    return model.predict(text)
