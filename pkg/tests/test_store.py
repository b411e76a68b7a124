"""Tests for the project store: dedup, decisions, status machine, snapshots."""
from __future__ import annotations

import io
import threading

import pytest

from revpipe.store import (
    Decision,
    Document,
    DocumentFilter,
    IllegalTransition,
    NotFoundError,
    Prediction,
    ProjectStore,
    ValidationError,
    dedup_key,
    normalize_doi,
    title_key,
)


@pytest.fixture()
def store(tmp_path):
    st = ProjectStore(tmp_path / "project.db")
    yield st
    st.close()


def make_doc(**kwargs) -> Document:
    base = dict(title="Seroprevalence of brucellosis in cattle", abstract="We studied herds.")
    base.update(kwargs)
    return Document(**base)


class TestNormalization:
    def test_doi_prefix_stripped_and_lowercased(self):
        assert normalize_doi("HTTPS://DOI.ORG/10.1/X") == "10.1/x"
        assert normalize_doi("doi:10.5/ABC") == "10.5/abc"
        assert normalize_doi(None) is None

    def test_title_key_strips_punctuation_and_case(self):
        assert title_key("Brucellosis, in Cattle!") == title_key("brucellosis in cattle")

    def test_dedup_key_prefers_doi(self):
        assert dedup_key("10.1/x", "anything") == "doi:10.1/x"
        assert dedup_key(None, "A Title") == "title:a title"


class TestPutDocument:
    def test_new_doc_gets_fresh_id(self, store):
        doc_id = store.put_document(make_doc(doi="10.1/x"))
        assert doc_id
        assert store.get_document(doc_id).doi == "10.1/x"

    def test_same_normalized_doi_returns_existing_id(self, store):
        first = store.put_document(make_doc(doi="10.1/x"))
        second = store.put_document(make_doc(title="Other words", doi="HTTPS://DOI.ORG/10.1/X"))
        assert second == first
        assert len(store.list_documents()) == 1

    def test_empty_title_rejected(self, store):
        with pytest.raises(ValidationError):
            store.put_document(make_doc(title="  "))

    def test_title_fallback_dedup(self, store):
        a = store.put_document(make_doc(title="Brucellosis in Cattle."))
        b = store.put_document(make_doc(title="brucellosis in cattle"))
        assert a == b

    def test_round_trip_all_fields(self, store):
        doc = make_doc(doi="10.9/z", issn="1234-5678", source_db="pubmed",
                       country="Astoria", disease="anthrax", pdf_path="x.pdf",
                       retrieved_at="2024-01-01T00:00:00+00:00")
        doc_id = store.put_document(doc)
        got = store.get_document(doc_id)
        for field in ("doi", "issn", "title", "abstract", "source_db", "country",
                      "disease", "pdf_path", "retrieved_at"):
            assert getattr(got, field) == getattr(doc, field)


class TestDecisions:
    def test_human_include_moves_needs_review_to_screened_in(self, store):
        doc_id = store.put_document(make_doc())
        store.set_status(doc_id, "needs_review")
        store.record_decision(Decision(doc_id=doc_id, verdict="include", origin="human"))
        assert store.get_document(doc_id).status == "screened_in"

    def test_model_exclude_with_confidence(self, store):
        doc_id = store.put_document(make_doc())
        store.record_decision(Decision(doc_id=doc_id, verdict="exclude", origin="model",
                                       confidence=0.93))
        assert store.get_document(doc_id).status == "screened_out"

    def test_unknown_doc_rejected(self, store):
        with pytest.raises(NotFoundError):
            store.record_decision(Decision(doc_id="nope", verdict="include", origin="human"))

    def test_model_decision_requires_confidence(self, store):
        doc_id = store.put_document(make_doc())
        with pytest.raises(ValidationError):
            store.record_decision(Decision(doc_id=doc_id, verdict="include", origin="model"))

    def test_human_decision_refuses_confidence(self, store):
        doc_id = store.put_document(make_doc())
        with pytest.raises(ValidationError):
            store.record_decision(Decision(doc_id=doc_id, verdict="include", origin="human",
                                           confidence=0.9))

    def test_later_human_decision_supersedes(self, store):
        doc_id = store.put_document(make_doc())
        store.record_decision(Decision(doc_id=doc_id, verdict="include", origin="human"))
        store.record_decision(Decision(doc_id=doc_id, verdict="exclude", origin="human"))
        active = store.active_human_decision(doc_id)
        assert active.verdict == "exclude"
        assert store.get_document(doc_id).status == "screened_out"
        assert store.labeled_docs() == [(doc_id, "exclude")]


class TestStatusMachine:
    def test_forward_chain_allowed(self, store):
        doc_id = store.put_document(make_doc())
        for status in ("fetched", "converted", "needs_review", "screened_in", "extracted"):
            store.set_status(doc_id, status)
        assert store.get_document(doc_id).status == "extracted"

    def test_backward_transition_rejected(self, store):
        doc_id = store.put_document(make_doc())
        store.set_status(doc_id, "converted")
        with pytest.raises(IllegalTransition):
            store.set_status(doc_id, "found")

    def test_screened_to_needs_review_requires_reroute(self, store):
        doc_id = store.put_document(make_doc())
        store.set_status(doc_id, "screened_out")
        with pytest.raises(IllegalTransition):
            store.set_status(doc_id, "needs_review")
        store.set_status(doc_id, "needs_review", force_reroute=True)
        assert store.get_document(doc_id).status == "needs_review"

    def test_reroute_never_overrides_human_decision(self, store):
        doc_id = store.put_document(make_doc())
        store.record_decision(Decision(doc_id=doc_id, verdict="include", origin="human"))
        with pytest.raises(IllegalTransition):
            store.set_status(doc_id, "needs_review", force_reroute=True)


class TestSnapshots:
    def _label(self, store, doc, verdict):
        doc_id = store.put_document(doc)
        store.record_decision(Decision(doc_id=doc_id, verdict=verdict, origin="human"))
        return doc_id

    def test_filter_selects_membership(self, store):
        a = self._label(store, make_doc(title="t1", country="Astoria"), "include")
        b = self._label(store, make_doc(title="t2", country="Astoria"), "exclude")
        self._label(store, make_doc(title="t3", country="Borenia"), "include")
        snap = store.snapshot_training_set(DocumentFilter(country="Astoria"))
        assert dict(snap.members) == {a: "include", b: "exclude"}

    def test_empty_selection_rejected(self, store):
        store.put_document(make_doc())
        with pytest.raises(ValidationError):
            store.snapshot_training_set(DocumentFilter(country="Nowhere"))

    def test_two_snapshots_distinct_ids_same_membership(self, store):
        self._label(store, make_doc(title="t1"), "include")
        s1 = store.snapshot_training_set()
        s2 = store.snapshot_training_set()
        assert s1.snapshot_id != s2.snapshot_id
        assert s1.members == s2.members

    def test_snapshot_immutable_under_later_edits(self, store):
        doc_id = self._label(store, make_doc(title="t1"), "include")
        snap = store.snapshot_training_set()
        store.record_decision(Decision(doc_id=doc_id, verdict="exclude", origin="human"))
        assert store.get_snapshot(snap.snapshot_id).members == ((doc_id, "include"),)


class TestPredictionsAndQueue:
    def test_queue_orders_by_confidence(self, store):
        ids = []
        for i, conf in enumerate((0.7, 0.6, 0.9)):
            doc_id = store.put_document(make_doc(title=f"doc {i}"))
            store.record_prediction(Prediction(doc_id=doc_id, model_version="m1",
                                               p_include=conf, verdict="include",
                                               confidence=conf, route="needs_review"))
            store.set_status(doc_id, "needs_review")
            ids.append(doc_id)
        queue = [doc.doc_id for doc, _ in store.queue()]
        assert queue == [ids[1], ids[0], ids[2]]

    def test_queue_pagination_disjoint_covering(self, store):
        for i in range(3):
            doc_id = store.put_document(make_doc(title=f"doc {i}"))
            store.record_prediction(Prediction(doc_id=doc_id, model_version="m1",
                                               p_include=0.6, verdict="include",
                                               confidence=0.6, route="needs_review"))
            store.set_status(doc_id, "needs_review")
        page1 = [d.doc_id for d, _ in store.queue(limit=2, offset=0)]
        page2 = [d.doc_id for d, _ in store.queue(limit=2, offset=2)]
        assert len(page1) == 2 and len(page2) == 1
        assert not set(page1) & set(page2)


class TestModelsAndConfig:
    def test_active_model_swap(self, store):
        v1 = store.save_model("screen", b"one", activate=True)
        v2 = store.save_model("screen", b"two", activate=True)
        version, payload = store.active_model("screen")
        assert version == v2 and payload == b"two"
        store.activate_model(v1)
        assert store.active_model("screen")[1] == b"one"

    def test_config_round_trip(self, store):
        assert store.get_config("tau") is None
        store.set_config("tau", "0.8")
        assert store.get_config("tau") == "0.8"


class TestInterchange:
    def test_jsonl_round_trip(self, store, tmp_path):
        store.put_document(make_doc(title="t1", doi="10.1/a"))
        store.put_document(make_doc(title="t2", country="Astoria"))
        buf = io.StringIO()
        assert store.export_jsonl(buf) == 2
        other = ProjectStore(tmp_path / "other.db")
        assert other.import_jsonl(io.StringIO(buf.getvalue())) == 2
        assert [d.to_json() for d in other.list_documents()] == \
               [d.to_json() for d in store.list_documents()]
        other.close()

    def test_import_is_idempotent(self, store):
        store.put_document(make_doc(title="t1", doi="10.1/a"))
        buf = io.StringIO()
        store.export_jsonl(buf)
        assert store.import_jsonl(io.StringIO(buf.getvalue())) == 0


class TestConcurrency:
    def test_parallel_readers_during_writes(self, store):
        ids = [store.put_document(make_doc(title=f"doc {i}")) for i in range(20)]
        errors = []

        def reader():
            try:
                for _ in range(50):
                    for doc_id in ids:
                        store.get_document(doc_id)
            except Exception as exc:  # pragma: no cover - failure path
                errors.append(exc)

        def writer():
            try:
                for i in range(20, 60):
                    store.put_document(make_doc(title=f"doc {i}"))
            except Exception as exc:  # pragma: no cover - failure path
                errors.append(exc)

        threads = [threading.Thread(target=reader) for _ in range(3)]
        threads.append(threading.Thread(target=writer))
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert len(store.list_documents()) == 60
