"""Sentence-level multi-label classifier tests."""
from __future__ import annotations

import logging

import pytest

from revpipe.extract.sentences import (
    LabeledSentence,
    SentenceModelError,
    load_sentence_model,
    predict_sentence_labels,
    read_sentence_corpus,
    save_sentence_model,
    sentence_features,
    train_sentence_classifier,
    write_sentence_corpus,
)


def corpus():
    rows = []
    for i in range(20):
        rows.append(LabeledSentence(
            unit_id=f"p{i}", text=f"prevalence of brucellosis was measured in trial {i}",
            labels=frozenset({"disease"})))
        rows.append(LabeledSentence(
            unit_id=f"n{i}", text=f"market prices of maize were recorded in survey {i}",
            labels=frozenset()))
    return rows


class TestTraining:
    def test_label_probability_separates_fixture(self):
        model = train_sentence_classifier(corpus(), epochs=40)
        pos = predict_sentence_labels(model, "prevalence of brucellosis was measured in trial 99")
        neg = predict_sentence_labels(model, "market prices of maize were recorded in survey 99")
        assert pos["disease"] > 0.5 > neg["disease"]

    def test_untrained_labels_absent(self):
        model = train_sentence_classifier(corpus(), epochs=5)
        probs = predict_sentence_labels(model, "anything at all")
        assert set(probs) == {"disease"}

    def test_label_in_every_sentence_skipped_with_warning(self, caplog):
        rows = [LabeledSentence(unit_id=f"u{i}", text=f"text {i}",
                                labels=frozenset({"disease"})) for i in range(4)]
        rows.append(LabeledSentence(unit_id="u9", text="other words",
                                    labels=frozenset({"disease", "species"})))
        with caplog.at_level(logging.WARNING):
            model = train_sentence_classifier(rows, epochs=5)
        assert "disease" in model.skipped
        assert any("disease" in rec.message for rec in caplog.records)
        assert "species" in model.weights  # has a negative example

    def test_empty_input_rejected(self):
        with pytest.raises(SentenceModelError):
            train_sentence_classifier([])

    def test_no_trainable_labels_rejected(self):
        rows = [LabeledSentence(unit_id="u1", text="a", labels=frozenset())]
        with pytest.raises(SentenceModelError):
            train_sentence_classifier(rows)

    def test_deterministic(self):
        m1 = train_sentence_classifier(corpus(), epochs=10)
        m2 = train_sentence_classifier(corpus(), epochs=10)
        assert m1.weights["disease"].tobytes() == m2.weights["disease"].tobytes()


class TestPrediction:
    def test_zero_weight_model_gives_half(self):
        model = train_sentence_classifier(corpus(), epochs=5)
        model.weights["disease"][:] = 0.0
        model.biases["disease"] = 0.0
        assert predict_sentence_labels(model, "whatever")["disease"] == pytest.approx(0.5)

    def test_empty_sentence_uses_bias_only(self):
        model = train_sentence_classifier(corpus(), epochs=10)
        probs = predict_sentence_labels(model, "")
        assert 0.0 < probs["disease"] < 1.0

    def test_probabilities_in_open_interval(self):
        model = train_sentence_classifier(corpus(), epochs=40)
        for s in corpus():
            for p in predict_sentence_labels(model, s.text).values():
                assert 0.0 < p < 1.0


class TestFeaturesAndCorpus:
    def test_unigram_and_bigram_presence(self):
        feats = sentence_features("goat disease risk")
        assert "u=goat" in feats
        assert "b=goat disease" in feats
        assert "b=disease risk" in feats

    def test_corpus_round_trip(self, tmp_path):
        path = tmp_path / "sent.jsonl"
        write_sentence_corpus(path, corpus()[:5])
        assert read_sentence_corpus(path) == corpus()[:5]

    def test_unknown_label_rejected(self, tmp_path):
        path = tmp_path / "sent.jsonl"
        path.write_text('{"unit_id": "u1", "text": "x", "labels": ["made_up"]}\n',
                        encoding="utf-8")
        with pytest.raises(SentenceModelError):
            read_sentence_corpus(path)

    def test_model_artifact_round_trip(self, tmp_path):
        model = train_sentence_classifier(corpus(), epochs=10)
        path = tmp_path / "sent.bin"
        save_sentence_model(model, path)
        loaded = load_sentence_model(path)
        text = "prevalence of brucellosis"
        assert predict_sentence_labels(loaded, text) == predict_sentence_labels(model, text)
