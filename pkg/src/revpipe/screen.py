"""Include/exclude screening from title and abstract.

Per-field TF-IDF unigram features over a concatenated title+abstract space,
a linear max-margin classifier trained by primal sub-gradient descent, a
sigmoid fitted over the margin for calibrated probabilities, and a
confidence threshold that routes uncertain documents to human review.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .docproc import token_strings

MODEL_HEADER = "revpipe-screen-v1"
DEFAULT_LAMBDA = 1e-4
DEFAULT_EPOCHS = 20


class ScreenError(Exception):
    pass


def text_terms(text: str) -> list[str]:
    """Lowercased unigrams under the shared tokenizer."""
    return [t.lower() for t in token_strings(text)]


@dataclass
class FieldVocab:
    index: dict[str, int]
    df: np.ndarray  # document frequency per term
    n_docs: int

    def idf(self) -> np.ndarray:
        return np.log((1.0 + self.n_docs) / (1.0 + self.df)) + 1.0


@dataclass
class Vectorizer:
    """Disjointly indexed per-field vocabularies: title block then abstract."""

    title: FieldVocab
    abstract: FieldVocab

    @property
    def dim(self) -> int:
        return len(self.title.index) + len(self.abstract.index)

    def to_json(self) -> dict:
        return {
            "title": {"index": self.title.index, "df": self.title.df.tolist(),
                      "n_docs": self.title.n_docs},
            "abstract": {"index": self.abstract.index, "df": self.abstract.df.tolist(),
                         "n_docs": self.abstract.n_docs},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Vectorizer":
        def fv(o: dict) -> FieldVocab:
            return FieldVocab(index=o["index"], df=np.asarray(o["df"], dtype=float),
                              n_docs=o["n_docs"])
        return cls(title=fv(obj["title"]), abstract=fv(obj["abstract"]))


def _fit_field(texts: Sequence[str]) -> FieldVocab:
    index: dict[str, int] = {}
    df_counts: list[int] = []
    for text in texts:
        seen: set[str] = set()
        for term in text_terms(text):  # first-occurrence order keeps fits reproducible
            if term in seen:
                continue
            seen.add(term)
            if term not in index:
                index[term] = len(index)
                df_counts.append(0)
            df_counts[index[term]] += 1
    return FieldVocab(index=index, df=np.asarray(df_counts, dtype=float), n_docs=len(texts))


def fit_vectorizer(titles: Sequence[str], abstracts: Sequence[str]) -> Vectorizer:
    """Per-field unigram vocabularies with idf = ln((1+N)/(1+df)) + 1."""
    if len(titles) != len(abstracts):
        raise ScreenError("titles and abstracts must be parallel")
    if not titles:
        raise ScreenError("cannot fit a vectorizer on an empty corpus")
    return Vectorizer(title=_fit_field(titles), abstract=_fit_field(abstracts))


def _field_vector(vocab: FieldVocab, text: str) -> dict[int, float]:
    counts: dict[int, float] = {}
    for term in text_terms(text):
        idx = vocab.index.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0.0) + 1.0
    if not counts:
        return {}
    idf = vocab.idf()
    vec = {i: tf * idf[i] for i, tf in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return {i: v / norm for i, v in vec.items()}


def transform(vectorizer: Vectorizer, title: str, abstract: str) -> dict[int, float]:
    """Sparse tf-idf vector, each field L2-normalized then concatenated."""
    out = dict(_field_vector(vectorizer.title, title))
    offset = len(vectorizer.title.index)
    for i, v in _field_vector(vectorizer.abstract, abstract).items():
        out[offset + i] = v
    return out


# ----------------------------------------------------------------------
# max-margin training (primal sub-gradient descent, hinge loss)

def train_svm(
    X: Sequence[dict[int, float]],
    y: Sequence[int],
    dim: int,
    lam: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Minimize lam/2*||w||^2 + mean hinge loss with the 1/(lam*t) schedule.

    Labels are +1/-1; the bias is updated on margin violations but not
    regularized.  Deterministic for a given seed.
    """
    if len(X) != len(y):
        raise ScreenError("X and y must be parallel")
    labels = set(y)
    if not labels <= {-1, 1} or len(labels) < 2:
        raise ScreenError("training data must contain both classes labeled +1/-1")
    rng = random.Random(seed)
    w = np.zeros(dim, dtype=float)
    b = 0.0
    t = 0
    order = list(range(len(X)))
    for _ in range(epochs):
        rng.shuffle(order)
        for i in order:
            t += 1
            eta = 1.0 / (lam * t)
            xi, yi = X[i], y[i]
            margin = yi * (sum(w[j] * v for j, v in xi.items()) + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                for j, v in xi.items():
                    w[j] += eta * yi * v
                b += eta * yi
    return w, b


# ----------------------------------------------------------------------
# calibration: sigmoid over the margin

_P_EPS = 1e-12


def sigmoid_probability(a: float, b: float, margin: float) -> float:
    """1/(1+exp(a*margin+b)), clamped to the open interval (0, 1).

    Float rounding would otherwise saturate extreme margins to exactly 0/1,
    breaking the confidence < 1 contract."""
    z = a * margin + b
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(min(z, 500.0)))
    else:
        ez = math.exp(max(z, -500.0))
        p = 1.0 - ez / (1.0 + ez)
    return min(max(p, _P_EPS), 1.0 - _P_EPS)


def calibrate(
    margins: Sequence[float], labels: Sequence[int], ridge: float = 1e-6
) -> tuple[float, float]:
    """Fit p(f) = 1/(1+exp(A*f+B)) by penalized likelihood maximization.

    A tiny ridge keeps the optimum finite on separable data; A is forced
    negative so probability increases with the margin.
    """
    if len(margins) != len(labels):
        raise ScreenError("margins and labels must be parallel")
    pos = sum(1 for t in labels if t == 1)
    neg = len(labels) - pos
    if pos == 0 or neg == 0:
        raise ScreenError("calibration needs both classes")
    f = np.asarray(margins, dtype=float)
    t = np.asarray([1.0 if v == 1 else 0.0 for v in labels])
    a, b = -1.0, 0.0
    for _ in range(200):
        z = a * f + b
        p = 1.0 / (1.0 + np.exp(np.clip(z, -500, 500)))
        # d nll / dz = t - p, with z = a*f + b; Hessian weights p(1-p)
        g = t - p
        ga = float(np.dot(g, f)) + ridge * a
        gb = float(np.sum(g)) + ridge * b
        wdiag = p * (1.0 - p)
        haa = float(np.dot(wdiag, f * f)) + ridge
        hab = float(np.dot(wdiag, f))
        hbb = float(np.sum(wdiag)) + ridge
        det = haa * hbb - hab * hab
        if abs(det) < 1e-300:
            break
        da = -(hbb * ga - hab * gb) / det
        db = -(haa * gb - hab * ga) / det
        a += da
        b += db
        if abs(da) < 1e-12 and abs(db) < 1e-12:
            break
    if a >= 0.0:
        a = -1e-6
    return a, b


# ----------------------------------------------------------------------
# the trained artifact

@dataclass
class Prediction:
    doc_id: str
    margin: float
    p_include: float
    verdict: str
    confidence: float
    route: str

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "margin": self.margin,
            "p_include": self.p_include,
            "verdict": self.verdict,
            "confidence": self.confidence,
            "route": self.route,
        }


@dataclass
class ScreeningModel:
    vectorizer: Vectorizer
    w: np.ndarray
    b: float
    calib_a: float
    calib_b: float
    tau: float = 0.75
    metadata: dict = field(default_factory=dict)

    def margin(self, title: str, abstract: str) -> float:
        x = transform(self.vectorizer, title, abstract)
        return float(sum(self.w[i] * v for i, v in x.items()) + self.b)

    def probability(self, title: str, abstract: str) -> float:
        return sigmoid_probability(self.calib_a, self.calib_b, self.margin(title, abstract))


def classify(model: ScreeningModel, title: str, abstract: str, doc_id: str = "") -> Prediction:
    """Verdict, calibrated confidence and review routing for one document.

    Ties at p = 0.5 go to include (recall-biased); a document is routed to
    review exactly when its confidence falls below the threshold.
    """
    f = model.margin(title, abstract)
    p = sigmoid_probability(model.calib_a, model.calib_b, f)
    verdict = "include" if p >= 0.5 else "exclude"
    confidence = max(p, 1.0 - p)
    route = "needs_review" if confidence < model.tau else "auto"
    return Prediction(doc_id=doc_id, margin=f, p_include=p, verdict=verdict,
                      confidence=confidence, route=route)


def review_fraction(confidences: Sequence[float], tau: float) -> float:
    if not confidences:
        return 0.0
    return sum(1 for c in confidences if c < tau) / len(confidences)


def choose_threshold(
    predictions: Sequence[Prediction],
    gold: Sequence[str],
    target_review_fraction: float,
) -> tuple[float, float, Optional[float]]:
    """Smallest threshold whose review fraction meets the target.

    Candidates are the observed confidence values plus the 0.5 and 1.0
    bounds.  Returns (tau, achieved review fraction, accuracy over the
    automatically decided subset; None when nothing is automated).
    """
    if not predictions:
        raise ScreenError("choose_threshold needs at least one prediction")
    if not 0.0 <= target_review_fraction <= 1.0:
        raise ScreenError("target review fraction must be in [0, 1]")
    confidences = [p.confidence for p in predictions]
    candidates = sorted(set(confidences) | {0.5, 1.0})
    for tau in candidates:
        frac = review_fraction(confidences, tau)
        if frac >= target_review_fraction:
            auto = [(p, g) for p, g in zip(predictions, gold) if p.confidence >= tau]
            if auto:
                acc = sum(1 for p, g in auto if p.verdict == g) / len(auto)
            else:
                acc = None
            return tau, frac, acc
    raise ScreenError("unreachable: tau=1.0 always reviews everything")


# ----------------------------------------------------------------------
# serialization

def save_model(model: ScreeningModel, path: str | Path) -> None:
    """Single-file artifact: a version header line followed by JSON."""
    payload = {
        "vectorizer": model.vectorizer.to_json(),
        "w": model.w.tolist(),
        "b": model.b,
        "calib_a": model.calib_a,
        "calib_b": model.calib_b,
        "tau": model.tau,
        "metadata": model.metadata,
    }
    Path(path).write_text(MODEL_HEADER + "\n" + json.dumps(payload), encoding="utf-8")


def dumps_model(model: ScreeningModel) -> bytes:
    payload = {
        "vectorizer": model.vectorizer.to_json(),
        "w": model.w.tolist(),
        "b": model.b,
        "calib_a": model.calib_a,
        "calib_b": model.calib_b,
        "tau": model.tau,
        "metadata": model.metadata,
    }
    return (MODEL_HEADER + "\n" + json.dumps(payload)).encode("utf-8")


def _parse_model(text: str) -> ScreeningModel:
    header, _, body = text.partition("\n")
    if header.strip() != MODEL_HEADER:
        raise ScreenError(f"not a screening model artifact (header {header!r})")
    payload = json.loads(body)
    return ScreeningModel(
        vectorizer=Vectorizer.from_json(payload["vectorizer"]),
        w=np.asarray(payload["w"], dtype=float),
        b=payload["b"],
        calib_a=payload["calib_a"],
        calib_b=payload["calib_b"],
        tau=payload["tau"],
        metadata=payload.get("metadata", {}),
    )


def load_model(path: str | Path) -> ScreeningModel:
    return _parse_model(Path(path).read_text(encoding="utf-8"))


def loads_model(blob: bytes) -> ScreeningModel:
    return _parse_model(blob.decode("utf-8"))


def train_screening_model(
    titles: Sequence[str],
    abstracts: Sequence[str],
    labels: Sequence[str],
    lam: float = DEFAULT_LAMBDA,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    tau: float = 0.75,
    metadata: Optional[dict] = None,
) -> ScreeningModel:
    """Fit vectorizer, weights and calibration from include/exclude labels."""
    vec = fit_vectorizer(titles, abstracts)
    y = [1 if v == "include" else -1 for v in labels]
    X = [transform(vec, t, a) for t, a in zip(titles, abstracts)]
    w, b = train_svm(X, y, vec.dim, lam=lam, epochs=epochs, seed=seed)
    margins = [sum(w[i] * v for i, v in x.items()) + b for x in X]
    a, cb = calibrate(margins, y)
    meta = {"lambda": lam, "epochs": epochs, "seed": seed}
    if metadata:
        meta.update(metadata)
    return ScreeningModel(vectorizer=vec, w=w, b=b, calib_a=a, calib_b=cb,
                          tau=tau, metadata=meta)
