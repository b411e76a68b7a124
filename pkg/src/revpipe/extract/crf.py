"""Linear-chain CRF tagger: emission features + tag transitions, trained by
gradient descent on the L2-regularized negative log-likelihood.

Scores are kept in log space throughout; the partition function comes from
the forward recursion and marginals from forward-backward.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..docproc import AnnotationUnit
from .bio import SpanAnnotation, decode_bio
from .features import TEMPLATE_IDS, featurize
from .schema import TAGS

CRF_HEADER = "revpipe-crf-v1"
DEFAULT_L2 = 1e-3
DEFAULT_EPOCHS = 100


class CrfError(Exception):
    pass


def _logsumexp(a: np.ndarray, axis: Optional[int] = None) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return out.reshape(())
    return np.squeeze(out, axis=axis)


@dataclass
class CrfModel:
    tags: tuple[str, ...] = TAGS
    feature_index: dict[str, int] = field(default_factory=dict)
    emit: np.ndarray = field(default_factory=lambda: np.zeros((0, len(TAGS))))
    trans: np.ndarray = field(default_factory=lambda: np.zeros((len(TAGS), len(TAGS))))
    l2: float = DEFAULT_L2
    templates: tuple[str, ...] = TEMPLATE_IDS
    metadata: dict = field(default_factory=dict)

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    def tag_index(self, tag: str) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise CrfError(f"unknown tag {tag!r}") from None

    def position_features(self, tokens: Sequence[str], i: int) -> list[int]:
        ids = []
        for feat in featurize(tokens, i):
            fid = self.feature_index.get(feat)
            if fid is not None:
                ids.append(fid)
        return ids

    def emissions(self, tokens: Sequence[str]) -> np.ndarray:
        """(n_tokens, n_tags) emission score matrix."""
        n = len(tokens)
        E = np.zeros((n, self.n_tags))
        for i in range(n):
            for fid in self.position_features(tokens, i):
                E[i] += self.emit[fid]
        return E

    # ------------------------------------------------------------------

    def score(self, tokens: Sequence[str], tags: Sequence[str]) -> float:
        """Unnormalized log score of one tag sequence."""
        if len(tags) != len(tokens):
            raise CrfError(f"{len(tokens)} tokens vs {len(tags)} tags")
        if not tokens:
            return 0.0
        idx = [self.tag_index(t) for t in tags]
        E = self.emissions(tokens)
        total = float(sum(E[i, idx[i]] for i in range(len(idx))))
        total += float(sum(self.trans[idx[i - 1], idx[i]] for i in range(1, len(idx))))
        return total

    def log_partition(self, tokens: Sequence[str]) -> float:
        if not tokens:
            return 0.0
        E = self.emissions(tokens)
        alpha = E[0].copy()
        for i in range(1, len(tokens)):
            alpha = _logsumexp(alpha[:, None] + self.trans, axis=0) + E[i]
        return float(_logsumexp(alpha))

    def sequence_nll(self, tokens: Sequence[str], tags: Sequence[str]) -> float:
        return self.log_partition(tokens) - self.score(tokens, tags)

    def viterbi(self, tokens: Sequence[str]) -> list[str]:
        """Highest-scoring tag sequence; ties resolve to the lowest tag index
        at the latest position where optimal paths differ."""
        if not tokens:
            return []
        E = self.emissions(tokens)
        n = len(tokens)
        delta = E[0].copy()
        back = np.zeros((n, self.n_tags), dtype=int)
        for i in range(1, n):
            cand = delta[:, None] + self.trans  # prev x cur
            back[i] = np.argmax(cand, axis=0)  # first (lowest) index wins ties
            delta = cand[back[i], np.arange(self.n_tags)] + E[i]
        path = [int(np.argmax(delta))]
        for i in range(n - 1, 0, -1):
            path.append(int(back[i, path[-1]]))
        path.reverse()
        return [self.tags[t] for t in path]

    def marginals(self, tokens: Sequence[str]) -> tuple[np.ndarray, np.ndarray, float]:
        """Posterior node marginals (n, T), edge marginals (n-1, T, T), logZ."""
        n = len(tokens)
        E = self.emissions(tokens)
        alpha = np.zeros((n, self.n_tags))
        alpha[0] = E[0]
        for i in range(1, n):
            alpha[i] = _logsumexp(alpha[i - 1][:, None] + self.trans, axis=0) + E[i]
        beta = np.zeros((n, self.n_tags))
        for i in range(n - 2, -1, -1):
            beta[i] = _logsumexp(self.trans + (E[i + 1] + beta[i + 1])[None, :], axis=1)
        log_z = float(_logsumexp(alpha[n - 1]))
        node = np.exp(alpha + beta - log_z)
        edge = np.zeros((max(n - 1, 0), self.n_tags, self.n_tags))
        for i in range(1, n):
            m = alpha[i - 1][:, None] + self.trans + (E[i] + beta[i])[None, :] - log_z
            edge[i - 1] = np.exp(m)
        return node, edge, log_z

    # ------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "tags": list(self.tags),
            "feature_index": self.feature_index,
            "emit": self.emit.tolist(),
            "trans": self.trans.tolist(),
            "l2": self.l2,
            "templates": list(self.templates),
            "metadata": self.metadata,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CrfModel":
        return cls(
            tags=tuple(obj["tags"]),
            feature_index=obj["feature_index"],
            emit=np.asarray(obj["emit"], dtype=float),
            trans=np.asarray(obj["trans"], dtype=float),
            l2=obj["l2"],
            templates=tuple(obj["templates"]),
            metadata=obj.get("metadata", {}),
        )


def save_crf(model: CrfModel, path: str | Path) -> None:
    Path(path).write_text(CRF_HEADER + "\n" + json.dumps(model.to_json()), encoding="utf-8")


def load_crf(path: str | Path) -> CrfModel:
    text = Path(path).read_text(encoding="utf-8")
    header, _, body = text.partition("\n")
    if header.strip() != CRF_HEADER:
        raise CrfError(f"not a tagger artifact (header {header!r})")
    return CrfModel.from_json(json.loads(body))


# ----------------------------------------------------------------------
# training

def _index_features(
    sequences: Sequence[tuple[Sequence[str], Sequence[str]]],
) -> tuple[dict[str, int], list[list[list[int]]]]:
    index: dict[str, int] = {}
    per_seq: list[list[list[int]]] = []
    for tokens, _ in sequences:
        rows: list[list[int]] = []
        for i in range(len(tokens)):
            ids = []
            for feat in featurize(tokens, i):
                if feat not in index:
                    index[feat] = len(index)
                ids.append(index[feat])
            rows.append(ids)
        per_seq.append(rows)
    return index, per_seq


def crf_objective_and_gradient(
    model: CrfModel,
    sequences: Sequence[tuple[Sequence[str], Sequence[str]]],
    feat_ids: Optional[list[list[list[int]]]] = None,
) -> tuple[float, np.ndarray, np.ndarray, float]:
    """Mean NLL + L2 penalty, with gradients wrt emission and transition
    weights; also returns the raw mean NLL."""
    n_seq = len(sequences)
    g_emit = np.zeros_like(model.emit)
    g_trans = np.zeros_like(model.trans)
    nll_total = 0.0
    for s, (tokens, tags) in enumerate(sequences):
        if not tokens:
            continue
        n = len(tokens)
        rows = feat_ids[s] if feat_ids is not None else [
            model.position_features(tokens, i) for i in range(n)
        ]
        E = np.zeros((n, model.n_tags))
        for i in range(n):
            for fid in rows[i]:
                E[i] += model.emit[fid]
        gold = [model.tag_index(t) for t in tags]

        alpha = np.zeros((n, model.n_tags))
        alpha[0] = E[0]
        for i in range(1, n):
            alpha[i] = _logsumexp(alpha[i - 1][:, None] + model.trans, axis=0) + E[i]
        beta = np.zeros((n, model.n_tags))
        for i in range(n - 2, -1, -1):
            beta[i] = _logsumexp(model.trans + (E[i + 1] + beta[i + 1])[None, :], axis=1)
        log_z = float(_logsumexp(alpha[n - 1]))

        gold_score = float(sum(E[i, gold[i]] for i in range(n)))
        gold_score += float(sum(model.trans[gold[i - 1], gold[i]] for i in range(1, n)))
        nll_total += log_z - gold_score

        node = np.exp(alpha + beta - log_z)  # (n, T)
        for i in range(n):
            diff = node[i].copy()
            diff[gold[i]] -= 1.0
            for fid in rows[i]:
                g_emit[fid] += diff
        for i in range(1, n):
            edge = np.exp(
                alpha[i - 1][:, None] + model.trans + (E[i] + beta[i])[None, :] - log_z
            )
            g_trans += edge
            g_trans[gold[i - 1], gold[i]] -= 1.0

    mean_nll = nll_total / n_seq
    g_emit /= n_seq
    g_trans /= n_seq
    obj = mean_nll + 0.5 * model.l2 * (float(np.sum(model.emit ** 2)) + float(np.sum(model.trans ** 2)))
    g_emit += model.l2 * model.emit
    g_trans += model.l2 * model.trans
    return obj, g_emit, g_trans, mean_nll


def crf_train(
    sequences: Sequence[tuple[Sequence[str], Sequence[str]]],
    l2: float = DEFAULT_L2,
    epochs: int = DEFAULT_EPOCHS,
    seed: int = 0,
    tags: tuple[str, ...] = TAGS,
    init_step: float = 0.5,
) -> CrfModel:
    """Full-batch gradient descent with backtracking, so the objective (and
    in practice the training NLL) decreases monotonically across epochs."""
    if not sequences:
        raise CrfError("no training sequences")
    for tokens, tag_seq in sequences:
        if len(tokens) != len(tag_seq):
            raise CrfError("token/tag length mismatch in training data")
    feature_index, feat_ids = _index_features(sequences)
    model = CrfModel(
        tags=tags,
        feature_index=feature_index,
        emit=np.zeros((len(feature_index), len(tags))),
        trans=np.zeros((len(tags), len(tags))),
        l2=l2,
        metadata={"seed": seed, "epochs": epochs, "sequences": len(sequences)},
    )
    step = init_step
    obj, g_emit, g_trans, nll = crf_objective_and_gradient(model, sequences, feat_ids)
    history = [nll]
    for _ in range(epochs):
        accepted = False
        for _ in range(30):
            trial_emit = model.emit - step * g_emit
            trial_trans = model.trans - step * g_trans
            trial = CrfModel(tags=tags, feature_index=feature_index,
                             emit=trial_emit, trans=trial_trans, l2=l2)
            t_obj, t_ge, t_gt, t_nll = crf_objective_and_gradient(trial, sequences, feat_ids)
            if t_obj <= obj + 1e-12:
                model.emit, model.trans = trial_emit, trial_trans
                obj, g_emit, g_trans, nll = t_obj, t_ge, t_gt, t_nll
                step *= 1.2
                accepted = True
                break
            step *= 0.5
        history.append(nll)
        if not accepted:
            break
    model.metadata["nll_history"] = history
    return model


def extract_spans(model: CrfModel, unit: AnnotationUnit) -> list[SpanAnnotation]:
    """Decode a chunk unit into labeled spans with surface text attached."""
    tokens = unit.tokens
    if not tokens:
        return []
    tags = model.viterbi(tokens)
    spans = []
    for label, start, end in decode_bio(tags):
        surface = " ".join(tokens[start:end])
        spans.append(SpanAnnotation(unit_id=unit.unit_id, label=label,
                                    start=start, end=end, text=surface))
    return spans
