"""Command-line interface.

Batch stages (search, fetch, convert, screen, extract, tabulate, eval) run
directly against files and the project store; the `review` group is a thin
HTTP client for a running review service (`serve`).
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from . import docproc, pdftext, screen, search as searchmod, tabulate as tabmod, triage
from .evalharness import experiments, synth
from .extract import bio, crf as crfmod, sentences as sentmod
from .fetch import PdfFetcher, load_rules
from .store import ProjectStore


@click.group()
def main() -> None:
    """Systematic-review automation pipeline."""


# ----------------------------------------------------------------------
# store

@main.group()
def store() -> None:
    """Project store import/export."""


@store.command("export")
@click.option("--db", "db_path", required=True, type=click.Path())
@click.option("--format", "fmt", default="jsonl", show_default=True)
@click.option("--out", "out_path", default="-", show_default=True)
def store_export(db_path: str, fmt: str, out_path: str) -> None:
    if fmt != "jsonl":
        raise click.UsageError(f"unsupported format {fmt!r}")
    st = ProjectStore(db_path)
    if out_path == "-":
        n = st.export_jsonl(sys.stdout)
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            n = st.export_jsonl(fh)
    click.echo(f"exported {n} documents", err=True)


@store.command("import")
@click.argument("infile", type=click.Path(exists=True))
@click.option("--db", "db_path", required=True, type=click.Path())
def store_import(infile: str, db_path: str) -> None:
    st = ProjectStore(db_path)
    with open(infile, "r", encoding="utf-8") as fh:
        n = st.import_jsonl(fh)
    click.echo(f"imported {n} new documents")


# ----------------------------------------------------------------------
# search

def _queries_from_config(cfg: dict) -> list[str]:
    queries = []
    if "groups" in cfg:
        queries.append(searchmod.build_query(
            searchmod.QuerySpec(tuple(tuple(g) for g in cfg["groups"]))))
    plan = cfg.get("plan")
    if plan:
        for country in plan.get("countries", []):
            for disease_terms in plan.get("diseases", []):
                groups = [tuple(plan.get("animals", [])), (country,),
                          tuple(disease_terms), tuple(plan.get("measures", []))]
                spec = searchmod.QuerySpec(tuple(g for g in groups if g))
                queries.append(searchmod.build_query(spec))
    if not queries:
        raise click.UsageError("config declares neither 'groups' nor a 'plan'")
    return queries


@main.group("search")
def search_group() -> None:
    """Boolean search over source connectors."""


@search_group.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--source", default="fixture", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def search_run(config_path: str, source: str, out_path: str) -> None:
    cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
    if source != "fixture":
        raise click.UsageError(
            f"source {source!r} is not configured in this build; live connectors "
            "are optional add-ons behind the same interface")
    connector = searchmod.FixtureConnector(
        fixture_dir=Path(cfg["fixture_dir"]),
        rate_per_minute=cfg.get("rate_per_minute", searchmod.DEFAULT_RATE_PER_MINUTE),
    )
    max_pages = cfg.get("max_pages", 5)
    stubs: list[searchmod.DocumentStub] = []
    for query in _queries_from_config(cfg):
        stubs.extend(searchmod.run_search(connector, query, max_pages))
    stubs = searchmod.dedup(stubs)
    if cfg.get("metadata_fixture"):
        # fill missing titles/abstracts from the metadata resolver
        resolver = searchmod.FixtureMetadataConnector.from_file(Path(cfg["metadata_fixture"]))
        for stub in stubs:
            if stub.doi and not stub.abstract:
                meta = searchmod.resolve_metadata(resolver, stub.doi)
                if meta:
                    stub.abstract = meta.get("abstract") or stub.abstract
                    stub.title = meta.get("title") or stub.title
    with open(out_path, "w", encoding="utf-8") as fh:
        for stub in stubs:
            fh.write(json.dumps(stub.to_json(), ensure_ascii=False) + "\n")
    click.echo(f"wrote {len(stubs)} stubs to {out_path}")


# ----------------------------------------------------------------------
# fetch

@main.group("fetch")
def fetch_group() -> None:
    """PDF retrieval."""


@fetch_group.command("run")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--rules", "rules_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--parallel", default=4, show_default=True)
def fetch_run(in_path: str, rules_path: str | None, out_dir: str, parallel: int) -> None:
    stubs = [searchmod.DocumentStub.from_json(json.loads(line))
             for line in Path(in_path).read_text(encoding="utf-8").splitlines() if line.strip()]
    rules = load_rules(rules_path) if rules_path else []
    fetcher = PdfFetcher(out_dir, rules)
    try:
        outcomes = fetcher.fetch_batch(stubs, parallelism=parallel)
    finally:
        fetcher.close()
    report = Path(out_dir) / "outcomes.jsonl"
    with open(report, "w", encoding="utf-8") as fh:
        for outcome in outcomes:
            fh.write(json.dumps(outcome.to_json()) + "\n")
    saved = sum(1 for o in outcomes if o.result == "pdf_saved")
    click.echo(f"{saved}/{len(outcomes)} PDFs saved; outcomes in {report}")


# ----------------------------------------------------------------------
# convert

@main.group("convert")
def convert_group() -> None:
    """PDF text extraction and sectioning."""


@convert_group.command("run")
@click.option("--pdf-dir", "pdf_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--fixture-dir", "fixture_dir", type=click.Path(exists=True),
              help="Directory of <sha256>.txt files replacing real extraction.")
@click.option("--headings", "headings_path", type=click.Path(exists=True),
              help="JSON map of heading phrase -> section overriding the defaults.")
def convert_run(pdf_dir: str, out_dir: str, fixture_dir: str | None,
                headings_path: str | None) -> None:
    extractor = (pdftext.FixtureExtractor.from_dir(fixture_dir)
                 if fixture_dir else pdftext.SimplePdfExtractor())
    headings = None
    if headings_path:
        headings = json.loads(Path(headings_path).read_text(encoding="utf-8"))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    for pdf in sorted(Path(pdf_dir).glob("*.pdf")):
        try:
            raw = pdftext.pdf_to_text(pdf, extractor)
        except pdftext.ConversionError as exc:
            click.echo(f"skipping {pdf.name}: {exc}", err=True)
            continue
        sdoc = docproc.segment_sections(docproc.clean_text(raw), doc_id=pdf.stem,
                                        headings=headings)
        (out / f"{pdf.stem}.json").write_text(
            json.dumps(sdoc.to_json(), ensure_ascii=False), encoding="utf-8")
        n += 1
    click.echo(f"converted {n} PDFs into {out_dir}")


# ----------------------------------------------------------------------
# screen

@main.group("screen")
def screen_group() -> None:
    """Include/exclude screening."""


@screen_group.command("train")
@click.option("--db", "db_path", required=True, type=click.Path(exists=True))
@click.option("--snapshot", "snapshot_id", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--lam", default=screen.DEFAULT_LAMBDA, show_default=True)
@click.option("--epochs", default=screen.DEFAULT_EPOCHS, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tau", default=triage.DEFAULT_TAU, show_default=True)
@click.option("--install", is_flag=True, help="Also activate the model in the store.")
def screen_train(db_path: str, snapshot_id: str, out_path: str, lam: float,
                 epochs: int, seed: int, tau: float, install: bool) -> None:
    st = ProjectStore(db_path)
    snap = st.get_snapshot(snapshot_id)
    titles, abstracts, labels = [], [], []
    for doc_id, label in snap.members:
        doc = st.get_document(doc_id)
        titles.append(doc.title)
        abstracts.append(doc.abstract)
        labels.append(label)
    model = screen.train_screening_model(
        titles, abstracts, labels, lam=lam, epochs=epochs, seed=seed, tau=tau,
        metadata={"snapshot_id": snapshot_id})
    screen.save_model(model, out_path)
    msg = f"model written to {out_path}"
    if install:
        version = triage.install_model(st, model)
        triage.set_tau(st, tau)
        triage.mark_retrained(st)
        msg += f"; installed as {version}"
    click.echo(msg)


@screen_group.command("predict")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def screen_predict(model_path: str, in_path: str, out_path: str) -> None:
    model = screen.load_model(model_path)
    n = 0
    with open(out_path, "w", encoding="utf-8") as out:
        for line in Path(in_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            doc_id = obj.get("doc_id") or obj.get("doi") or ""
            pred = screen.classify(model, obj.get("title", ""), obj.get("abstract", ""),
                                   doc_id)
            out.write(json.dumps(pred.to_json()) + "\n")
            n += 1
    click.echo(f"scored {n} documents into {out_path}")


@screen_group.command("apply")
@click.option("--db", "db_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_path", type=click.Path(exists=True),
              help="Defaults to the store's active model.")
def screen_apply(db_path: str, model_path: str | None) -> None:
    st = ProjectStore(db_path)
    if model_path:
        model = screen.load_model(model_path)
        version = triage.install_model(st, model)
    else:
        active = triage.load_active_model(st)
        if active is None:
            raise click.UsageError("store has no active model; pass --model")
        version, model = active
    n = triage.screen_pending(st, model, version)
    click.echo(f"screened {n} pending documents; queue size {len(st.queue())}")


# ----------------------------------------------------------------------
# extract

@main.group("extract")
def extract_group() -> None:
    """Span and sentence-level extraction."""


@extract_group.command("train-crf")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="CoNLL corpus: token<TAB>tag, blank line between units.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--l2", default=crfmod.DEFAULT_L2, show_default=True)
@click.option("--epochs", default=crfmod.DEFAULT_EPOCHS, show_default=True)
@click.option("--seed", default=0, show_default=True)
def extract_train_crf(in_path: str, out_path: str, l2: float, epochs: int, seed: int) -> None:
    units = bio.read_conll(in_path)
    sequences = [(tokens, tags) for _, tokens, tags in units]
    model = crfmod.crf_train(sequences, l2=l2, epochs=epochs, seed=seed)
    crfmod.save_crf(model, out_path)
    click.echo(f"trained on {len(sequences)} units; model written to {out_path}")


@extract_group.command("train-sent")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="JSON Lines: {unit_id, text, labels}.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--l2", default=sentmod.DEFAULT_L2, show_default=True)
@click.option("--epochs", default=sentmod.DEFAULT_EPOCHS, show_default=True)
@click.option("--seed", default=0, show_default=True)
def extract_train_sent(in_path: str, out_path: str, l2: float, epochs: int, seed: int) -> None:
    corpus = sentmod.read_sentence_corpus(in_path)
    model = sentmod.train_sentence_classifier(corpus, l2=l2, epochs=epochs, seed=seed)
    sentmod.save_sentence_model(model, out_path)
    click.echo(f"trained {len(model.trained_labels)} label models "
               f"({len(model.skipped)} skipped) into {out_path}")


@extract_group.command("run")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def extract_run(model_path: str, in_dir: str, out_path: str) -> None:
    model = crfmod.load_crf(model_path)
    n_spans = 0
    with open(out_path, "w", encoding="utf-8") as out:
        for path in sorted(Path(in_dir).glob("*.json")):
            sdoc = docproc.SectionedDocument.from_json(
                json.loads(path.read_text(encoding="utf-8")))
            for unit in docproc.all_chunks(sdoc):
                for span in crfmod.extract_spans(model, unit):
                    row = span.to_json()
                    row["doc_id"] = sdoc.doc_id
                    row["section"] = unit.section
                    row["unit_text"] = unit.text
                    out.write(json.dumps(row, ensure_ascii=False) + "\n")
                    n_spans += 1
    click.echo(f"extracted {n_spans} spans into {out_path}")


# ----------------------------------------------------------------------
# tabulate

@main.group("tabulate")
def tabulate_group() -> None:
    """Tabular review output."""


@tabulate_group.command("run")
@click.option("--spans", "spans_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def tabulate_run(spans_path: str, out_path: str) -> None:
    by_doc: dict[str, list[dict]] = {}
    for line in Path(spans_path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        row = json.loads(line)
        by_doc.setdefault(row.get("doc_id", ""), []).append(row)
    all_rows: list[dict[str, str]] = []
    for doc_id, rows in by_doc.items():
        spans = [bio.SpanAnnotation.from_json(r) for r in rows]
        unit_order = list(dict.fromkeys(r["unit_id"] for r in rows))
        unit_sections = {r["unit_id"]: r.get("section", "") for r in rows}
        unit_texts = {r["unit_id"]: r.get("unit_text", "") for r in rows}
        groups = tabmod.group_measurements(doc_id, spans, unit_order, unit_sections, unit_texts)
        all_rows.extend(tabmod.render_rows(doc_id, groups, start_row=len(all_rows) + 1))
    tabmod.write_csv(all_rows, out_path)
    click.echo(f"wrote {len(all_rows)} rows to {out_path}")


# ----------------------------------------------------------------------
# eval

@main.group("eval")
def eval_group() -> None:
    """Experiment protocols and the synthetic corpus generator."""


def _read_examples(path: str) -> list[experiments.LabeledExample]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            out.append(experiments.LabeledExample(
                doc_id=obj["doc_id"], title=obj["title"], abstract=obj["abstract"],
                label=obj["label"], country=obj.get("country")))
    return out


def _write_points(points, out_path: str, plot_path: str | None) -> None:
    experiments.write_points_csv(points, out_path)
    if plot_path:
        experiments.write_plot_json(points, plot_path)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


@eval_group.command("ablate")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--plot", "plot_path", type=click.Path())
@click.option("--fractions", default="0.2,0.4,0.6,0.8,1.0", show_default=True)
@click.option("--seeds", default="0,1,2,3,4", show_default=True)
def eval_ablate(corpus_path: str, out_path: str, plot_path: str | None,
                fractions: str, seeds: str) -> None:
    points = experiments.ablate_volume(
        _read_examples(corpus_path),
        fractions=_parse_floats(fractions), seeds=_parse_ints(seeds))
    _write_points(points, out_path, plot_path)
    click.echo(f"{len(points)} curve points written to {out_path}")


@eval_group.command("holdout")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--plot", "plot_path", type=click.Path())
@click.option("--fractions", default="1.0", show_default=True)
@click.option("--seeds", default="0,1,2,3,4", show_default=True)
def eval_holdout(corpus_path: str, out_path: str, plot_path: str | None,
                 fractions: str, seeds: str) -> None:
    points = experiments.holdout_country(
        _read_examples(corpus_path),
        fractions=_parse_floats(fractions), seeds=_parse_ints(seeds))
    _write_points(points, out_path, plot_path)
    click.echo(f"{len(points)} curve points written to {out_path}")


@eval_group.command("sweep")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--plot", "plot_path", type=click.Path())
@click.option("--taus", default="0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95,1.0",
              show_default=True)
def eval_sweep(model_path: str, corpus_path: str, out_path: str,
               plot_path: str | None, taus: str) -> None:
    model = screen.load_model(model_path)
    points = experiments.threshold_sweep(model, _read_examples(corpus_path),
                                         taus=_parse_floats(taus))
    _write_points(points, out_path, plot_path)
    click.echo(f"{len(points)} curve points written to {out_path}")


@eval_group.command("synth")
@click.option("--spec", "spec_path", type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Labeled corpus JSONL for the eval commands.")
@click.option("--chunks", "chunks_path", type=click.Path(),
              help="Optional CoNLL span corpus output.")
@click.option("--sentences", "sentences_path", type=click.Path(),
              help="Optional labeled-sentence JSONL output.")
def eval_synth(spec_path: str | None, out_path: str,
               chunks_path: str | None, sentences_path: str | None) -> None:
    cfg = synth.SynthConfig.from_file(spec_path) if spec_path else synth.SynthConfig()
    corpus = synth.generate_corpus(cfg)
    with open(out_path, "w", encoding="utf-8") as fh:
        for doc in corpus.docs:
            fh.write(json.dumps({
                "doc_id": doc.doc_id, "title": doc.title, "abstract": doc.abstract,
                "label": doc.label, "country": doc.country}, ensure_ascii=False) + "\n")
    if chunks_path:
        units = []
        for unit in corpus.chunk_units:
            tokens = unit.tokens
            spans = [(s.label, s.start, s.end) for s in corpus.chunk_spans[unit.unit_id]]
            units.append((unit.unit_id, tokens, bio.encode_bio(len(tokens), spans)))
        bio.write_conll(chunks_path, units)
    if sentences_path:
        sentmod.write_sentence_corpus(sentences_path, corpus.sentences)
    click.echo(f"generated {len(corpus.docs)} documents "
               f"({len(corpus.chunk_units)} chunk units, {len(corpus.sentences)} sentences)")


# ----------------------------------------------------------------------
# service and its thin client

@main.command("serve")
@click.option("--store", "db_path", required=True, type=click.Path())
@click.option("--addr", default="127.0.0.1:8000", show_default=True)
def serve(db_path: str, addr: str) -> None:
    """Run the review service."""
    import uvicorn

    from .service import create_app

    host, _, port = addr.partition(":")
    app = create_app(ProjectStore(db_path))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or "8000"), log_level="info")


@main.group("review")
def review_group() -> None:
    """Thin client for a running review service."""


def _client(url: str) -> httpx.Client:
    return httpx.Client(base_url=url, timeout=30.0)


def _echo_response(resp: httpx.Response) -> None:
    try:
        click.echo(json.dumps(resp.json(), indent=2))
    except ValueError:
        click.echo(resp.text)
    if resp.status_code >= 400:
        raise SystemExit(1)


@review_group.command("queue")
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--limit", type=int)
@click.option("--offset", type=int, default=0, show_default=True)
def review_queue(url: str, limit: int | None, offset: int) -> None:
    params = {"offset": offset}
    if limit is not None:
        params["limit"] = limit
    with _client(url) as client:
        _echo_response(client.get("/queue", params=params))


@review_group.command("decide")
@click.argument("doc_id")
@click.argument("verdict", type=click.Choice(["include", "exclude"]))
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--reviewer", "reviewer_id")
def review_decide(doc_id: str, verdict: str, url: str, reviewer_id: str | None) -> None:
    with _client(url) as client:
        _echo_response(client.post(
            f"/queue/{doc_id}/decision",
            json={"verdict": verdict, "reviewer_id": reviewer_id}))


@review_group.command("stats")
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def review_stats(url: str) -> None:
    with _client(url) as client:
        _echo_response(client.get("/stats"))


@review_group.command("threshold")
@click.argument("tau", type=float)
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def review_threshold(tau: float, url: str) -> None:
    with _client(url) as client:
        _echo_response(client.put("/config/threshold", json={"tau": tau}))


@review_group.command("retrain")
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def review_retrain(url: str) -> None:
    with _client(url) as client:
        _echo_response(client.post("/retrain"))


if __name__ == "__main__":
    main()
