"""Tests for query building, fixture connectors, pacing, dedup."""
from __future__ import annotations

import json

import pytest

from revpipe.search import (
    DocumentStub,
    FixtureConnector,
    FixtureMetadataConnector,
    PageParseError,
    QuerySpec,
    QueryValidationError,
    SlidingWindowLimiter,
    build_query,
    dedup,
    parse_query,
    query_hash,
    record_fixture_page,
    resolve_metadata,
    run_search,
)

FULL_EXAMPLE = (
    '(Livestock OR ruminants OR sheep OR goats OR cattle OR cow OR ram OR ewe OR bull)'
    ' AND (Ethiopia) AND (Anthrax OR "Bacillus anthracis") AND (prevalence OR incidence)'
)


class TestBuildQuery:
    def test_full_example_rendering(self):
        spec = QuerySpec((
            ("Livestock", "ruminants", "sheep", "goats", "cattle", "cow", "ram", "ewe", "bull"),
            ("Ethiopia",),
            ("Anthrax", "Bacillus anthracis"),
            ("prevalence", "incidence"),
        ))
        assert build_query(spec) == FULL_EXAMPLE

    def test_single_group_single_term(self):
        assert build_query(QuerySpec((("brucellosis",),))) == "(brucellosis)"

    def test_empty_term_rejected(self):
        with pytest.raises(QueryValidationError):
            build_query(QuerySpec((("goats", ""),)))

    def test_no_groups_rejected(self):
        with pytest.raises(QueryValidationError):
            build_query(QuerySpec(()))

    def test_round_trip_recovers_groups(self):
        specs = [
            QuerySpec((("a", "b c"), ("d",))),
            QuerySpec((("one",),)),
            QuerySpec((("Anthrax", "Bacillus anthracis"), ("prevalence", "incidence"))),
        ]
        for spec in specs:
            assert parse_query(build_query(spec)) == spec


def _stub(i: int, **kwargs) -> DocumentStub:
    base = dict(title=f"paper {i}", source_db="fixture", doi=f"10.1/p{i}",
                landing_url=f"https://x.org/p{i}")
    base.update(kwargs)
    return DocumentStub(**base)


@pytest.fixture()
def fixture_dir(tmp_path):
    query = "(brucellosis)"
    record_fixture_page(tmp_path, query, 1, [_stub(i) for i in range(10)])
    record_fixture_page(tmp_path, query, 2, [_stub(i) for i in range(10, 20)])
    return tmp_path


class TestRunSearch:
    def test_replays_pages_in_order(self, fixture_dir):
        connector = FixtureConnector(fixture_dir)
        stubs = run_search(connector, "(brucellosis)", max_pages=5)
        assert [s.title for s in stubs] == [f"paper {i}" for i in range(20)]

    def test_max_pages_bounds(self, fixture_dir):
        connector = FixtureConnector(fixture_dir)
        stubs = run_search(connector, "(brucellosis)", max_pages=1)
        assert len(stubs) == 10

    def test_corrupted_page_preserves_earlier_results(self, fixture_dir):
        bad = fixture_dir / query_hash("(brucellosis)") / "page-2.json"
        bad.write_text("{not json", encoding="utf-8")
        connector = FixtureConnector(fixture_dir)
        with pytest.raises(PageParseError) as err:
            run_search(connector, "(brucellosis)", max_pages=5)
        assert err.value.page == 2
        assert len(err.value.partial) == 10

    def test_rate_budget_never_exceeded_in_any_window(self, fixture_dir):
        # simulated clock: acquire() sleeps advance time, never real waits
        class FakeClock:
            def __init__(self):
                self.now = 0.0

            def monotonic(self):
                return self.now

            def sleep(self, seconds):
                self.now += seconds

        clock = FakeClock()
        limiter = SlidingWindowLimiter(5, clock=clock.monotonic, sleeper=clock.sleep)
        issue_times = []
        for _ in range(25):
            limiter.acquire()
            issue_times.append(clock.now)
            clock.now += 0.01  # requests themselves take a moment
        for i, t in enumerate(issue_times):
            window = [u for u in issue_times if t - 60.0 < u <= t]
            assert len(window) <= 5, f"request {i}: {len(window)} requests in 60s"


class TestResolveMetadata:
    def test_known_doi_replayed(self):
        connector = FixtureMetadataConnector({"10.1/x": {"title": "T", "abstract": "A"}})
        assert resolve_metadata(connector, "10.1/X") == {"title": "T", "abstract": "A"}

    def test_unknown_doi_absent(self):
        connector = FixtureMetadataConnector({})
        assert resolve_metadata(connector, "10.1/zzz") is None

    def test_malformed_identifier_rejected(self):
        connector = FixtureMetadataConnector({})
        with pytest.raises(QueryValidationError):
            resolve_metadata(connector, "not-a-doi")

    def test_issn_accepted(self):
        connector = FixtureMetadataConnector({"1234-567x": {"title": "J", "abstract": ""}})
        assert resolve_metadata(connector, "1234-567X")["title"] == "J"


class TestDedup:
    def test_case_insensitive_doi_dedup(self):
        stubs = [_stub(1, doi="10.1/A"), _stub(2, doi="10.1/a")]
        out = dedup(stubs)
        assert len(out) == 1
        assert out[0].title == "paper 1"  # first occurrence survives

    def test_distinct_dois_unchanged(self):
        stubs = [_stub(1), _stub(2)]
        assert dedup(stubs) == stubs

    def test_title_fallback_modulo_punctuation(self):
        stubs = [
            _stub(1, doi=None, title="Anthrax, in goats!"),
            _stub(2, doi=None, title="anthrax in goats"),
        ]
        assert len(dedup(stubs)) == 1

    def test_idempotent(self):
        stubs = [_stub(1, doi="10.1/A"), _stub(2, doi="10.1/a"), _stub(3)]
        once = dedup(stubs)
        assert dedup(once) == once

    def test_first_seen_source_survives(self):
        stubs = [_stub(1, source_db="pubmed"), _stub(1, source_db="wos")]
        assert dedup(stubs)[0].source_db == "pubmed"


class TestFixtureFormat:
    def test_pages_written_as_json_arrays(self, tmp_path):
        path = record_fixture_page(tmp_path, "(x)", 1, [_stub(1)])
        items = json.loads(path.read_text(encoding="utf-8"))
        assert isinstance(items, list) and items[0]["title"] == "paper 1"
        assert path.parent.name == query_hash("(x)")
        assert path.name == "page-1.json"
