"""BIO codec and CoNLL interchange tests."""
from __future__ import annotations

import random

import pytest

from revpipe.extract import (
    LABELS,
    BioError,
    decode_bio,
    encode_bio,
    read_conll,
    write_conll,
)


class TestEncodeDecode:
    def test_multiword_span_tags(self):
        tokens = ["Rose", "Bengal", "Plate", "Test", "found"]
        tags = encode_bio(len(tokens), [("diagnostic_test", 0, 4)])
        assert tags == ["B-diagnostic_test", "I-diagnostic_test",
                        "I-diagnostic_test", "I-diagnostic_test", "O"]

    def test_no_spans_all_outside(self):
        assert encode_bio(3, []) == ["O", "O", "O"]

    def test_overlap_rejected(self):
        with pytest.raises(BioError):
            encode_bio(5, [("disease", 0, 3), ("species", 2, 4)])

    def test_out_of_range_rejected(self):
        with pytest.raises(BioError):
            encode_bio(3, [("disease", 1, 4)])

    def test_repair_rule_orphan_inside(self):
        assert decode_bio(["O", "I-disease"]) == [("disease", 1, 2)]

    def test_repair_rule_label_switch(self):
        assert decode_bio(["I-disease", "I-species"]) == [("disease", 0, 1), ("species", 1, 2)]

    def test_adjacent_b_tags_are_two_spans(self):
        assert decode_bio(["B-disease", "B-disease"]) == [("disease", 0, 1), ("disease", 1, 2)]

    def test_round_trip_random_span_sets(self):
        rng = random.Random(9)
        for _ in range(300):
            n = rng.randint(1, 25)
            spans = random_spans(rng, n)
            assert decode_bio(encode_bio(n, spans)) == spans

    def test_repair_always_yields_valid_spans(self):
        rng = random.Random(10)
        alphabet = ["O"] + [f"{k}-{lbl}" for lbl in LABELS[:4] for k in "BI"]
        for _ in range(300):
            n = rng.randint(1, 15)
            tags = [rng.choice(alphabet) for _ in range(n)]
            spans = decode_bio(tags)
            last_end = 0
            for label, start, end in spans:
                assert 0 <= start < end <= n
                assert start >= last_end  # non-overlapping, ordered
                last_end = end
                assert label in LABELS


def random_spans(rng: random.Random, n: int) -> list[tuple[str, int, int]]:
    spans = []
    pos = 0
    while pos < n:
        if rng.random() < 0.4:
            length = rng.randint(1, min(4, n - pos))
            spans.append((rng.choice(LABELS), pos, pos + length))
            pos += length
        else:
            pos += 1
    return spans


class TestConll:
    def test_round_trip(self, tmp_path):
        units = [
            ("u1", ["Rose", "Bengal", "found"], ["B-diagnostic_test", "I-diagnostic_test", "O"]),
            ("u2", ["1.72%"], ["B-individual_prevalence"]),
        ]
        path = tmp_path / "corpus.conll"
        write_conll(path, units)
        assert read_conll(path) == units

    def test_exact_format(self, tmp_path):
        path = tmp_path / "corpus.conll"
        write_conll(path, [("u9", ["a", "b"], ["O", "B-disease"])])
        assert path.read_text(encoding="utf-8") == "#unit u9\na\tO\nb\tB-disease\n"

    def test_length_mismatch_rejected(self, tmp_path):
        with pytest.raises(BioError):
            write_conll(tmp_path / "x.conll", [("u1", ["a"], ["O", "O"])])

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.conll"
        path.write_text("#unit u1\na b c\n", encoding="utf-8")
        with pytest.raises(BioError):
            read_conll(path)
