"""CLI tests: each pipeline stage end to end through the command surface."""
from __future__ import annotations

import io
import json

import pytest
from click.testing import CliRunner

from revpipe.cli import main
from revpipe.docproc import segment_sections
from revpipe.search import DocumentStub, build_query, QuerySpec, record_fixture_page
from revpipe.store import Decision, Document, ProjectStore

reportlab = pytest.importorskip("reportlab")
from reportlab.lib.pagesizes import A4  # noqa: E402
from reportlab.pdfgen import canvas  # noqa: E402


@pytest.fixture()
def runner():
    return CliRunner()


def test_search_run_fixture(tmp_path, runner):
    fixture_dir = tmp_path / "fx"
    groups = [["brucellosis", "Bang disease"], ["Astoria"]]
    query = build_query(QuerySpec(tuple(tuple(g) for g in groups)))
    stubs = [DocumentStub(title=f"paper {i}", source_db="fixture", doi=f"10.1/p{i}",
                          landing_url=f"https://x.org/{i}") for i in range(4)]
    record_fixture_page(fixture_dir, query, 1, stubs[:2])
    record_fixture_page(fixture_dir, query, 2, stubs[2:])
    config = tmp_path / "search.json"
    config.write_text(json.dumps({"fixture_dir": str(fixture_dir), "groups": groups,
                                  "max_pages": 5}), encoding="utf-8")
    out = tmp_path / "stubs.jsonl"
    result = runner.invoke(main, ["search", "run", "--config", str(config),
                                  "--source", "fixture", "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert json.loads(lines[0])["title"] == "paper 0"


def test_search_enriches_metadata_from_fixture(tmp_path, runner):
    fixture_dir = tmp_path / "fx"
    query = build_query(QuerySpec((("brucellosis",),)))
    record_fixture_page(fixture_dir, query, 1, [
        DocumentStub(title="bare stub", source_db="fixture", doi="10.1/meta1")])
    meta = tmp_path / "meta.json"
    meta.write_text(json.dumps({"10.1/meta1": {"title": "Resolved title",
                                               "abstract": "Resolved abstract"}}),
                    encoding="utf-8")
    config = tmp_path / "search.json"
    config.write_text(json.dumps({"fixture_dir": str(fixture_dir),
                                  "groups": [["brucellosis"]],
                                  "metadata_fixture": str(meta)}), encoding="utf-8")
    out = tmp_path / "stubs.jsonl"
    result = runner.invoke(main, ["search", "run", "--config", str(config),
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    row = json.loads(out.read_text(encoding="utf-8").splitlines()[0])
    assert row["title"] == "Resolved title"
    assert row["abstract"] == "Resolved abstract"


def test_search_rejects_unconfigured_source(tmp_path, runner):
    config = tmp_path / "search.json"
    config.write_text(json.dumps({"fixture_dir": ".", "groups": [["x"]]}), encoding="utf-8")
    result = runner.invoke(main, ["search", "run", "--config", str(config),
                                  "--source", "scopus", "--out", str(tmp_path / "o.jsonl")])
    assert result.exit_code != 0
    assert "not configured" in result.output


def test_store_import_export_round_trip(tmp_path, runner):
    stubs_file = tmp_path / "stubs.jsonl"
    rows = [{"title": f"paper {i}", "doi": f"10.1/p{i}", "source_db": "fixture",
             "abstract": "words"} for i in range(3)]
    stubs_file.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    db = tmp_path / "project.db"
    result = runner.invoke(main, ["store", "import", str(stubs_file), "--db", str(db)])
    assert result.exit_code == 0, result.output
    assert "3 new documents" in result.output
    out = tmp_path / "export.jsonl"
    result = runner.invoke(main, ["store", "export", "--db", str(db),
                                  "--format", "jsonl", "--out", str(out)])
    assert result.exit_code == 0, result.output
    exported = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert [d["title"] for d in exported] == ["paper 0", "paper 1", "paper 2"]


def test_convert_run_on_generated_pdf(tmp_path, runner):
    pdf_dir = tmp_path / "pdfs"
    pdf_dir.mkdir()
    buf = io.BytesIO()
    c = canvas.Canvas(buf, pagesize=A4)
    y = 800
    for line in ("Abstract", "We sampled 291 cattle for brucellosis.",
                 "Introduction", "Bovine disease context here."):
        c.drawString(72, y, line)
        y -= 14
    c.showPage()
    c.save()
    (pdf_dir / "p1.pdf").write_bytes(buf.getvalue())
    out_dir = tmp_path / "sections"
    result = runner.invoke(main, ["convert", "run", "--pdf-dir", str(pdf_dir),
                                  "--out", str(out_dir)])
    assert result.exit_code == 0, result.output
    payload = json.loads((out_dir / "p1.json").read_text(encoding="utf-8"))
    names = [s["name"] for s in payload["sections"]]
    assert "abstract" in names and "introduction" in names


def _labeled_store(tmp_path):
    db = tmp_path / "project.db"
    st = ProjectStore(db)
    texts = [("brucellosis prevalence in cattle", "animals tested seroprevalence", "include"),
             ("maize market prices", "crop economics trade", "exclude"),
             ("anthrax prevalence in goats", "herds sampled positive", "include"),
             ("irrigation pump maintenance", "water systems economics", "exclude")]
    for title, abstract, label in texts:
        doc_id = st.put_document(Document(title=title, abstract=abstract))
        st.record_decision(Decision(doc_id=doc_id, verdict=label, origin="human"))
    snap = st.snapshot_training_set()
    st.close()
    return db, snap.snapshot_id


def test_screen_train_and_predict(tmp_path, runner):
    db, snapshot_id = _labeled_store(tmp_path)
    model_path = tmp_path / "model.bin"
    result = runner.invoke(main, ["screen", "train", "--db", str(db),
                                  "--snapshot", snapshot_id, "--out", str(model_path),
                                  "--epochs", "20"])
    assert result.exit_code == 0, result.output
    assert model_path.read_text(encoding="utf-8").startswith("revpipe-screen-v1")

    docs = tmp_path / "docs.jsonl"
    docs.write_text(json.dumps({"doc_id": "q1", "title": "brucellosis prevalence survey",
                                "abstract": "cattle tested positive"}) + "\n", encoding="utf-8")
    preds = tmp_path / "preds.jsonl"
    result = runner.invoke(main, ["screen", "predict", "--model", str(model_path),
                                  "--in", str(docs), "--out", str(preds)])
    assert result.exit_code == 0, result.output
    row = json.loads(preds.read_text(encoding="utf-8").splitlines()[0])
    assert row["doc_id"] == "q1"
    assert row["verdict"] in ("include", "exclude")
    assert 0.5 <= row["confidence"] < 1.0


def test_synth_extract_tabulate_pipeline(tmp_path, runner):
    spec = tmp_path / "gen.json"
    spec.write_text(json.dumps({"n_docs": 45, "seed": 3}), encoding="utf-8")
    corpus = tmp_path / "corpus.jsonl"
    chunks = tmp_path / "chunks.conll"
    sentences = tmp_path / "sentences.jsonl"
    result = runner.invoke(main, ["eval", "synth", "--spec", str(spec), "--out", str(corpus),
                                  "--chunks", str(chunks), "--sentences", str(sentences)])
    assert result.exit_code == 0, result.output

    crf_path = tmp_path / "crf.bin"
    result = runner.invoke(main, ["extract", "train-crf", "--in", str(chunks),
                                  "--out", str(crf_path), "--epochs", "25"])
    assert result.exit_code == 0, result.output

    sent_path = tmp_path / "sent.bin"
    result = runner.invoke(main, ["extract", "train-sent", "--in", str(sentences),
                                  "--out", str(sent_path), "--epochs", "25"])
    assert result.exit_code == 0, result.output

    # sections built from the synthetic abstracts, then spans via the tagger
    sections_dir = tmp_path / "sections"
    sections_dir.mkdir()
    docs = [json.loads(line) for line in corpus.read_text(encoding="utf-8").splitlines()]
    for doc in docs[:6]:
        sdoc = segment_sections("Abstract\n" + doc["abstract"], doc_id=doc["doc_id"])
        (sections_dir / f"{doc['doc_id']}.json").write_text(
            json.dumps(sdoc.to_json()), encoding="utf-8")
    spans_path = tmp_path / "spans.jsonl"
    result = runner.invoke(main, ["extract", "run", "--model", str(crf_path),
                                  "--in", str(sections_dir), "--out", str(spans_path)])
    assert result.exit_code == 0, result.output

    csv_path = tmp_path / "review.csv"
    result = runner.invoke(main, ["tabulate", "run", "--spans", str(spans_path),
                                  "--out", str(csv_path)])
    assert result.exit_code == 0, result.output
    lines = csv_path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("ROW_NUMBER,IDENTIFIER")
    include_docs = [d for d in docs[:6] if d["label"] == "include"]
    if include_docs:  # the tagger should surface at least one measurement row
        assert len(lines) > 1


def test_eval_ablate_holdout_sweep(tmp_path, runner):
    spec = tmp_path / "gen.json"
    spec.write_text(json.dumps({"n_docs": 90, "seed": 1}), encoding="utf-8")
    corpus = tmp_path / "corpus.jsonl"
    runner.invoke(main, ["eval", "synth", "--spec", str(spec), "--out", str(corpus)])

    out = tmp_path / "ablate.csv"
    result = runner.invoke(main, ["eval", "ablate", "--corpus", str(corpus),
                                  "--out", str(out), "--fractions", "0.5,1.0",
                                  "--seeds", "0"])
    assert result.exit_code == 0, result.output
    assert len(out.read_text(encoding="utf-8").splitlines()) == 3  # header + 2 points

    out = tmp_path / "holdout.csv"
    result = runner.invoke(main, ["eval", "holdout", "--corpus", str(corpus),
                                  "--out", str(out), "--seeds", "0"])
    assert result.exit_code == 0, result.output
    assert len(out.read_text(encoding="utf-8").splitlines()) == 4  # header + 3 countries

    db, snapshot_id = _labeled_store(tmp_path)
    model_path = tmp_path / "model.bin"
    runner.invoke(main, ["screen", "train", "--db", str(db), "--snapshot", snapshot_id,
                         "--out", str(model_path), "--epochs", "10"])
    out = tmp_path / "sweep.csv"
    plot = tmp_path / "sweep.json"
    result = runner.invoke(main, ["eval", "sweep", "--model", str(model_path),
                                  "--corpus", str(corpus), "--out", str(out),
                                  "--plot", str(plot), "--taus", "0.5,0.75,1.0"])
    assert result.exit_code == 0, result.output
    payload = json.loads(plot.read_text(encoding="utf-8"))
    assert len(payload["points"]) == 3
