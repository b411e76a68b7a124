"""Fetch tests against a local fixture HTTP server."""
from __future__ import annotations

import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from revpipe.fetch import (
    FetchRule,
    PdfFetcher,
    load_rules,
    resolve_pdf_link,
)
from revpipe.search import DocumentStub

PDF_BYTES = b"%PDF-1.4 fake body for tests\n%%EOF"


class _Handler(BaseHTTPRequestHandler):
    requests: list[str] = []

    def log_message(self, *args):  # quiet
        pass

    def do_GET(self):
        type(self).requests.append(self.path)
        routes = {
            "/direct.pdf": ("application/pdf", PDF_BYTES),
            "/files/m.pdf": ("application/pdf", PDF_BYTES),
            "/files/a.pdf": ("application/pdf", PDF_BYTES),
            "/get": ("application/pdf", PDF_BYTES),
            "/landing/meta": ("text/html", b'<html><head>'
                              b'<meta name="citation_pdf_url" content="/files/m.pdf">'
                              b'</head><body>x</body></html>'),
            "/landing/anchor": ("text/html", b'<html><body>'
                                b'<a href="/files/a.pdf">Download</a></body></html>'),
            "/landing/queryanchor": ("text/html", b'<html><body>'
                                     b'<a href="/get?file=1">Full text</a></body></html>'),
            "/landing/none": ("text/html", b"<html><body>nothing here</body></html>"),
            "/landing/fake": ("text/html", b"<html><body>not a pdf</body></html>"),
        }
        if self.path.split("?")[0] == "/forbidden":
            self.send_response(403)
            self.end_headers()
            return
        found = routes.get(self.path.split("?")[0])
        if found is None:
            self.send_response(404)
            self.end_headers()
            return
        ctype, body = found
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture(scope="module")
def server():
    httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}"
    httpd.shutdown()


@pytest.fixture()
def request_log():
    _Handler.requests = []
    return _Handler.requests


def make_stub(url: str, doc_id: str = "d1") -> DocumentStub:
    return DocumentStub(title=f"stub {doc_id}", source_db="fixture",
                        landing_url=url, doc_id=doc_id)


class TestResolvePdfLink:
    def test_meta_tag_wins(self):
        html = ('<meta name="citation_pdf_url" content="https://x.org/p.pdf">'
                '<a href="/other.pdf">x</a>')
        assert resolve_pdf_link(html, "https://x.org/v/1") == "https://x.org/p.pdf"

    def test_relative_anchor_resolved(self):
        html = '<a href="/files/a.pdf">get</a>'
        assert resolve_pdf_link(html, "https://x.org/v/1") == "https://x.org/files/a.pdf"

    def test_neither_absent(self):
        assert resolve_pdf_link("<p>no links</p>", "https://x.org") is None

    def test_anchor_with_query_string(self):
        html = '<a href="paper.pdf?download=1">get</a>'
        assert resolve_pdf_link(html, "https://x.org/v/") == "https://x.org/v/paper.pdf?download=1"


class TestFetchPdf:
    def test_direct_pdf_saved(self, server, tmp_path, request_log):
        fetcher = PdfFetcher(tmp_path)
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/direct.pdf"))
        fetcher.close()
        assert outcome.result == "pdf_saved"
        assert outcome.bytes_saved == len(PDF_BYTES)
        with open(outcome.path, "rb") as fh:
            assert fh.read(4) == b"%PDF"

    def test_meta_link_followed(self, server, tmp_path, request_log):
        fetcher = PdfFetcher(tmp_path)
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/landing/meta"))
        fetcher.close()
        assert outcome.result == "pdf_saved"
        assert outcome.resolved_url.endswith("/files/m.pdf")

    def test_anchor_link_followed(self, server, tmp_path, request_log):
        fetcher = PdfFetcher(tmp_path)
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/landing/anchor"))
        fetcher.close()
        assert outcome.result == "pdf_saved"

    def test_no_link_found(self, server, tmp_path, request_log):
        fetcher = PdfFetcher(tmp_path)
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/landing/none"))
        fetcher.close()
        assert outcome.result == "link_not_found"

    def test_forbidden(self, server, tmp_path, request_log):
        fetcher = PdfFetcher(tmp_path)
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/forbidden"))
        fetcher.close()
        assert outcome.result == "forbidden"

    def test_transport_error_never_raises(self, tmp_path):
        fetcher = PdfFetcher(tmp_path, timeout=0.5)
        outcome = fetcher.fetch_pdf(make_stub("http://127.0.0.1:1/nothing"))
        fetcher.close()
        assert outcome.result == "transport_error"

    def test_non_pdf_payload_rejected(self, server, tmp_path, request_log):
        rule = FetchRule(domain="127.0.0.1", strategy="direct")
        fetcher = PdfFetcher(tmp_path, [rule])
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/landing/fake"))
        fetcher.close()
        assert outcome.result == "not_pdf"


class TestRules:
    def test_rule_overrides_generic_no_landing_request(self, server, tmp_path, request_log):
        # template rule goes straight to the file: the landing page is never hit
        rule = FetchRule(domain="127.0.0.1", strategy="custom_path_template",
                         params={"template": "{scheme}://{host}/files/m.pdf"})
        fetcher = PdfFetcher(tmp_path, [rule])
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/landing/meta"))
        fetcher.close()
        assert outcome.result == "pdf_saved"
        assert "/landing/meta" not in request_log

    def test_anchor_pattern_rule_finds_non_pdf_href(self, server, tmp_path, request_log):
        # generic anchor scan requires a .pdf suffix and would miss this link
        rule = FetchRule(domain="127.0.0.1", strategy="anchor_pattern",
                         params={"pattern": r"file="})
        fetcher = PdfFetcher(tmp_path, [rule])
        outcome = fetcher.fetch_pdf(make_stub(f"{server}/landing/queryanchor"))
        fetcher.close()
        assert outcome.result == "pdf_saved"

    def test_rules_file_round_trip(self, tmp_path):
        path = tmp_path / "rules.conf"
        path.write_text(
            '[{"domain": "x.org", "strategy": "meta_tag"},'
            ' {"domain": "y.org", "strategy": "anchor_pattern", "params": {"pattern": "pdf"}}]',
            encoding="utf-8")
        rules = load_rules(path)
        assert [r.domain for r in rules] == ["x.org", "y.org"]

    def test_duplicate_domain_rejected(self, tmp_path):
        path = tmp_path / "rules.conf"
        path.write_text('[{"domain": "x.org", "strategy": "direct"},'
                        ' {"domain": "x.org", "strategy": "direct"}]', encoding="utf-8")
        with pytest.raises(ValueError):
            load_rules(path)


class TestFetchBatch:
    def _stubs(self, server):
        urls = ["/direct.pdf", "/landing/meta", "/landing/none", "/landing/anchor",
                "/forbidden", "/direct.pdf", "/landing/meta", "/landing/anchor",
                "/landing/none", "/direct.pdf"]
        return [make_stub(f"{server}{u}", doc_id=f"d{i}") for i, u in enumerate(urls)]

    def test_order_preserved_at_parallelism_4(self, server, tmp_path, request_log):
        fetcher = PdfFetcher(tmp_path)
        outcomes = fetcher.fetch_batch(self._stubs(server), parallelism=4)
        fetcher.close()
        assert [o.doc_id for o in outcomes] == [f"d{i}" for i in range(10)]

    def test_parallelism_does_not_change_outcomes(self, server, tmp_path, request_log):
        f1 = PdfFetcher(tmp_path / "a")
        seq = [(o.doc_id, o.result) for o in f1.fetch_batch(self._stubs(server), parallelism=1)]
        f1.close()
        f4 = PdfFetcher(tmp_path / "b")
        par = [(o.doc_id, o.result) for o in f4.fetch_batch(self._stubs(server), parallelism=4)]
        f4.close()
        assert seq == par

    def test_empty_batch(self, tmp_path):
        fetcher = PdfFetcher(tmp_path)
        assert fetcher.fetch_batch([], parallelism=3) == []
        fetcher.close()
