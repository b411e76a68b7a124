"""PDF retrieval: landing-page link resolution, per-domain rules, parallel batches.

Sites differ in how they expose the PDF behind a landing page; the generic
strategy (page metadata, then anchor scan) covers most, and a declarative
rules file overrides it for domains that need special handling.
"""
from __future__ import annotations

import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from typing import Optional
from urllib.parse import urljoin, urlparse

import httpx

from .search import DocumentStub
from .store import dedup_key

logger = logging.getLogger(__name__)

PDF_MAGIC = b"%PDF"
DEFAULT_USER_AGENT = (
    "Mozilla/5.0 (X11; Linux x86_64; rv:115.0) Gecko/20100101 Firefox/115.0"
)
MAX_PDF_BYTES = 50 * 1024 * 1024
TRANSFER_TIMEOUT = 60.0
PER_HOST_CONCURRENCY = 2

RESULT_PDF_SAVED = "pdf_saved"
RESULT_NOT_PDF = "not_pdf"
RESULT_LINK_NOT_FOUND = "link_not_found"
RESULT_TRANSPORT_ERROR = "transport_error"
RESULT_FORBIDDEN = "forbidden"

STRATEGIES = ("direct", "meta_tag", "anchor_pattern", "custom_path_template")


@dataclass
class FetchRule:
    """Domain-specific PDF resolution; params depend on the strategy."""

    domain: str
    strategy: str
    params: dict = field(default_factory=dict)
    user_agent: Optional[str] = None


@dataclass
class FetchOutcome:
    doc_id: str
    result: str
    bytes_saved: Optional[int] = None
    resolved_url: Optional[str] = None
    path: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "result": self.result,
            "bytes_saved": self.bytes_saved,
            "resolved_url": self.resolved_url,
            "path": self.path,
        }


def load_rules(path: str | Path) -> list[FetchRule]:
    """Read the JSON rules file: a list of {domain, strategy, params} records."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    rules = []
    seen = set()
    for obj in raw:
        rule = FetchRule(
            domain=obj["domain"],
            strategy=obj["strategy"],
            params=obj.get("params", {}),
            user_agent=obj.get("user_agent"),
        )
        if rule.strategy not in STRATEGIES:
            raise ValueError(f"unknown fetch strategy {rule.strategy!r}")
        if rule.domain in seen:
            raise ValueError(f"duplicate rule for domain {rule.domain!r}")
        seen.add(rule.domain)
        rules.append(rule)
    return rules


class _LinkScanner(HTMLParser):
    """Collects citation_pdf_url meta content and anchor hrefs, in page order."""

    def __init__(self) -> None:
        super().__init__()
        self.meta_pdf_url: Optional[str] = None
        self.anchor_hrefs: list[str] = []

    def handle_starttag(self, tag: str, attrs: list[tuple[str, Optional[str]]]) -> None:
        d = dict(attrs)
        if tag == "meta" and d.get("name") == "citation_pdf_url" and d.get("content"):
            if self.meta_pdf_url is None:
                self.meta_pdf_url = d["content"]
        elif tag == "a" and d.get("href"):
            self.anchor_hrefs.append(d["href"])


def resolve_pdf_link(html: str, base_url: str) -> Optional[str]:
    """PDF URL from a landing page: meta citation_pdf_url first, then the
    first anchor ending in .pdf (resolved against the base URL)."""
    scanner = _LinkScanner()
    scanner.feed(html)
    if scanner.meta_pdf_url:
        return urljoin(base_url, scanner.meta_pdf_url)
    for href in scanner.anchor_hrefs:
        if href.split("?")[0].split("#")[0].lower().endswith(".pdf"):
            return urljoin(base_url, href)
    return None


def _match_rule(url: str, rules: list[FetchRule]) -> Optional[FetchRule]:
    host = (urlparse(url).hostname or "").lower()
    for rule in rules:
        dom = rule.domain.lower()
        if host == dom or host.endswith("." + dom):
            return rule
    return None


def _stub_id(stub: DocumentStub) -> str:
    return stub.doc_id or dedup_key(stub.doi, stub.title)


def _safe_filename(doc_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", doc_id) + ".pdf"


class PdfFetcher:
    """Resolves and downloads PDFs for stubs; all failures become outcomes."""

    def __init__(
        self,
        out_dir: str | Path,
        rules: Optional[list[FetchRule]] = None,
        client: Optional[httpx.Client] = None,
        timeout: float = TRANSFER_TIMEOUT,
    ):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.rules = rules or []
        self._client = client or httpx.Client(follow_redirects=True, timeout=timeout)
        self._host_slots: dict[str, threading.Semaphore] = {}
        self._slots_lock = threading.Lock()

    def close(self) -> None:
        self._client.close()

    def _host_slot(self, url: str) -> threading.Semaphore:
        host = urlparse(url).netloc
        with self._slots_lock:
            if host not in self._host_slots:
                self._host_slots[host] = threading.Semaphore(PER_HOST_CONCURRENCY)
            return self._host_slots[host]

    def _get(self, url: str, user_agent: Optional[str]) -> httpx.Response:
        slot = self._host_slot(url)
        with slot:
            return self._client.get(
                url, headers={"User-Agent": user_agent or DEFAULT_USER_AGENT}
            )

    def _save_pdf(self, doc_id: str, url: str, body: bytes) -> FetchOutcome:
        if not body.startswith(PDF_MAGIC):
            return FetchOutcome(doc_id, RESULT_NOT_PDF, resolved_url=url)
        if len(body) > MAX_PDF_BYTES:
            return FetchOutcome(doc_id, RESULT_NOT_PDF, resolved_url=url)
        path = self.out_dir / _safe_filename(doc_id)
        path.write_bytes(body)
        return FetchOutcome(doc_id, RESULT_PDF_SAVED, bytes_saved=len(body),
                            resolved_url=url, path=str(path))

    def fetch_pdf(self, stub: DocumentStub) -> FetchOutcome:
        doc_id = _stub_id(stub)
        url = stub.landing_url
        if not url:
            return FetchOutcome(doc_id, RESULT_LINK_NOT_FOUND)
        rule = _match_rule(url, self.rules)
        try:
            if rule is not None:
                return self._fetch_with_rule(doc_id, stub, url, rule)
            return self._fetch_generic(doc_id, url, None)
        except httpx.HTTPError as exc:
            logger.warning("transport failure for %s: %s", url, exc)
            return FetchOutcome(doc_id, RESULT_TRANSPORT_ERROR, resolved_url=url)

    def _fetch_generic(self, doc_id: str, url: str, user_agent: Optional[str]) -> FetchOutcome:
        resp = self._get(url, user_agent)
        if resp.status_code == 403:
            return FetchOutcome(doc_id, RESULT_FORBIDDEN, resolved_url=url)
        if resp.status_code >= 400:
            return FetchOutcome(doc_id, RESULT_TRANSPORT_ERROR, resolved_url=url)
        if resp.content.startswith(PDF_MAGIC):
            return self._save_pdf(doc_id, url, resp.content)
        link = resolve_pdf_link(resp.text, str(resp.url))
        if link is None:
            return FetchOutcome(doc_id, RESULT_LINK_NOT_FOUND, resolved_url=url)
        return self._download(doc_id, link, user_agent)

    def _download(self, doc_id: str, url: str, user_agent: Optional[str]) -> FetchOutcome:
        resp = self._get(url, user_agent)
        if resp.status_code == 403:
            return FetchOutcome(doc_id, RESULT_FORBIDDEN, resolved_url=url)
        if resp.status_code >= 400:
            return FetchOutcome(doc_id, RESULT_TRANSPORT_ERROR, resolved_url=url)
        return self._save_pdf(doc_id, url, resp.content)

    def _fetch_with_rule(
        self, doc_id: str, stub: DocumentStub, url: str, rule: FetchRule
    ) -> FetchOutcome:
        ua = rule.user_agent
        if rule.strategy == "direct":
            return self._download(doc_id, url, ua)
        if rule.strategy == "custom_path_template":
            template = rule.params.get("template", "")
            parsed = urlparse(url)
            doi = stub.doi or ""
            target = template.format(
                scheme=parsed.scheme,
                host=parsed.netloc,
                path=parsed.path.lstrip("/"),
                doi=doi,
                doi_suffix=doi.split("/", 1)[1] if "/" in doi else doi,
                landing_url=url,
            )
            return self._download(doc_id, target, ua)
        resp = self._get(url, ua)
        if resp.status_code == 403:
            return FetchOutcome(doc_id, RESULT_FORBIDDEN, resolved_url=url)
        if resp.status_code >= 400:
            return FetchOutcome(doc_id, RESULT_TRANSPORT_ERROR, resolved_url=url)
        if rule.strategy == "meta_tag":
            scanner = _LinkScanner()
            scanner.feed(resp.text)
            if scanner.meta_pdf_url is None:
                return FetchOutcome(doc_id, RESULT_LINK_NOT_FOUND, resolved_url=url)
            return self._download(doc_id, urljoin(str(resp.url), scanner.meta_pdf_url), ua)
        if rule.strategy == "anchor_pattern":
            pattern = re.compile(rule.params.get("pattern", r"\.pdf$"))
            scanner = _LinkScanner()
            scanner.feed(resp.text)
            for href in scanner.anchor_hrefs:
                if pattern.search(href):
                    return self._download(doc_id, urljoin(str(resp.url), href), ua)
            return FetchOutcome(doc_id, RESULT_LINK_NOT_FOUND, resolved_url=url)
        raise ValueError(f"unknown strategy {rule.strategy!r}")

    def fetch_batch(self, stubs: list[DocumentStub], parallelism: int = 4) -> list[FetchOutcome]:
        """Fetch all stubs with bounded concurrency; outcomes keep stub order."""
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if not stubs:
            return []
        results: list[Optional[FetchOutcome]] = [None] * len(stubs)
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            futures = {pool.submit(self.fetch_pdf, stub): i for i, stub in enumerate(stubs)}
            for fut, i in futures.items():
                results[i] = fut.result()
        return [r for r in results if r is not None]
