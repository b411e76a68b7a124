"""Boolean query construction and paged search over pluggable source connectors.

Live databases (Scopus, Pubmed, Web of Science, a Google-Scholar proxy) sit
behind the same ``SourceConnector`` interface as the file-backed fixture
connector used in tests, so the pipeline runs without credentials.
"""
from __future__ import annotations

import json
import re
import time
from collections import deque
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path
from typing import Callable, Optional, Protocol

from .store import dedup_key

DEFAULT_RATE_PER_MINUTE = 30


class SearchError(Exception):
    pass


class QueryValidationError(SearchError):
    pass


class TransportError(SearchError):
    """Retriable connector failure; carries the page where it happened."""

    def __init__(self, message: str, page: int, partial: Optional[list["DocumentStub"]] = None):
        super().__init__(message)
        self.page = page
        self.partial = partial or []


class PageParseError(SearchError):
    """A result page could not be decoded; earlier pages are preserved."""

    def __init__(self, message: str, page: int, partial: Optional[list["DocumentStub"]] = None):
        super().__init__(message)
        self.page = page
        self.partial = partial or []


@dataclass(frozen=True)
class QuerySpec:
    """Ordered term groups; each group is OR-ed, groups are AND-ed."""

    groups: tuple[tuple[str, ...], ...]

    def validate(self) -> None:
        if not self.groups:
            raise QueryValidationError("query needs at least one term group")
        for group in self.groups:
            if not group:
                raise QueryValidationError("term groups must be non-empty")
            for term in group:
                if not term or not term.strip():
                    raise QueryValidationError("terms must be non-empty")


@dataclass
class DocumentStub:
    """A search hit: enough metadata to dedup and fetch, nothing more."""

    title: str
    source_db: str
    doi: Optional[str] = None
    issn: Optional[str] = None
    abstract: Optional[str] = None
    landing_url: Optional[str] = None
    doc_id: Optional[str] = None

    def validate(self) -> None:
        if not self.doi and not self.landing_url:
            raise QueryValidationError(
                f"stub {self.title!r} has neither doi nor landing_url"
            )

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "source_db": self.source_db,
            "doi": self.doi,
            "issn": self.issn,
            "abstract": self.abstract,
            "landing_url": self.landing_url,
            "doc_id": self.doc_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DocumentStub":
        return cls(
            title=obj["title"],
            source_db=obj.get("source_db", "fixture"),
            doi=obj.get("doi"),
            issn=obj.get("issn"),
            abstract=obj.get("abstract"),
            landing_url=obj.get("landing_url"),
            doc_id=obj.get("doc_id"),
        )


def _render_term(term: str) -> str:
    if re.search(r"\s", term):
        return f'"{term}"'
    return term


def build_query(spec: QuerySpec) -> str:
    """Render groups as ``(t1 OR t2)`` joined by `` AND ``; phrases quoted."""
    spec.validate()
    parts = []
    for group in spec.groups:
        parts.append("(" + " OR ".join(_render_term(t) for t in group) + ")")
    return " AND ".join(parts)


def parse_query(query: str) -> QuerySpec:
    """Inverse of build_query, used to check the rendering is lossless."""
    groups = []
    for part in query.split(" AND "):
        part = part.strip()
        if not (part.startswith("(") and part.endswith(")")):
            raise QueryValidationError(f"malformed group {part!r}")
        terms = tuple(t.strip().strip('"') for t in part[1:-1].split(" OR "))
        groups.append(terms)
    return QuerySpec(groups=tuple(groups))


def query_hash(query: str) -> str:
    """Stable directory name for a query's recorded fixture pages."""
    return sha256(query.encode("utf-8")).hexdigest()[:16]


class SlidingWindowLimiter:
    """Caps issued requests at ``per_minute`` in any 60-second window.

    A plain token bucket admits bursts above the budget inside a window, so a
    request-timestamp log is kept instead.  Clock and sleep are injectable for
    simulated-time tests.
    """

    def __init__(
        self,
        per_minute: int,
        clock: Callable[[], float] = time.monotonic,
        sleeper: Callable[[float], None] = time.sleep,
    ):
        if per_minute < 1:
            raise ValueError("rate budget must be >= 1 request/minute")
        self.per_minute = per_minute
        self._clock = clock
        self._sleep = sleeper
        self._issued: deque[float] = deque()

    def acquire(self) -> None:
        while True:
            now = self._clock()
            while self._issued and self._issued[0] <= now - 60.0:
                self._issued.popleft()
            if len(self._issued) < self.per_minute:
                self._issued.append(now)
                return
            # the microsecond pad keeps the wait strictly positive so a
            # coarse (or simulated) clock always moves past the boundary
            self._sleep(max(self._issued[0] + 60.0 - now, 0.0) + 1e-6)


class SourceConnector(Protocol):
    """A paged search backend; page numbering starts at 1."""

    name: str
    rate_per_minute: int

    def fetch_page(self, query: str, page: int) -> Optional[list[DocumentStub]]:
        """Stubs for one result page, or None when the query has no more pages."""
        ...


@dataclass
class FixtureConnector:
    """Replays recorded result pages from ``<dir>/<query-hash>/page-<n>.json``."""

    fixture_dir: Path
    name: str = "fixture"
    rate_per_minute: int = DEFAULT_RATE_PER_MINUTE

    def fetch_page(self, query: str, page: int) -> Optional[list[DocumentStub]]:
        path = Path(self.fixture_dir) / query_hash(query) / f"page-{page}.json"
        if not path.exists():
            return None
        try:
            items = json.loads(path.read_text(encoding="utf-8"))
            return [DocumentStub.from_json(obj) for obj in items]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise PageParseError(f"unreadable fixture page {path}: {exc}", page) from exc


def record_fixture_page(fixture_dir: Path, query: str, page: int, stubs: list[DocumentStub]) -> Path:
    """Write a result page in the fixture layout (test/capture helper)."""
    d = Path(fixture_dir) / query_hash(query)
    d.mkdir(parents=True, exist_ok=True)
    path = d / f"page-{page}.json"
    path.write_text(json.dumps([s.to_json() for s in stubs], indent=2), encoding="utf-8")
    return path


def run_search(
    connector: SourceConnector,
    query: str,
    max_pages: int,
    limiter: Optional[SlidingWindowLimiter] = None,
) -> list[DocumentStub]:
    """Concatenate stubs over up to ``max_pages`` pages under the rate budget."""
    if max_pages < 1:
        raise QueryValidationError("max_pages must be >= 1")
    if limiter is None:
        limiter = SlidingWindowLimiter(getattr(connector, "rate_per_minute", DEFAULT_RATE_PER_MINUTE))
    collected: list[DocumentStub] = []
    for page in range(1, max_pages + 1):
        limiter.acquire()
        try:
            stubs = connector.fetch_page(query, page)
        except PageParseError as exc:
            raise PageParseError(str(exc), page, partial=collected) from exc
        except TransportError as exc:
            raise TransportError(str(exc), page, partial=collected) from exc
        if stubs is None:
            break
        collected.extend(stubs)
    return collected


class MetadataConnector(Protocol):
    """Resolves a DOI or ISSN to title/abstract metadata."""

    def resolve(self, identifier: str) -> Optional[dict]:
        ...


_DOI_RE = re.compile(r"^10\.\d+(?:\.\d+)*/\S+$")
_ISSN_RE = re.compile(r"^\d{4}-\d{3}[\dxX]$")


def _valid_identifier(identifier: str) -> bool:
    ident = identifier.strip()
    for prefix in ("https://doi.org/", "http://doi.org/", "doi:"):
        if ident.lower().startswith(prefix):
            ident = ident[len(prefix):]
    return bool(_DOI_RE.match(ident) or _ISSN_RE.match(ident))


@dataclass
class FixtureMetadataConnector:
    """Replays metadata lookups from a JSON map {identifier: {title, abstract}}."""

    records: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path: Path) -> "FixtureMetadataConnector":
        return cls(records=json.loads(Path(path).read_text(encoding="utf-8")))

    def resolve(self, identifier: str) -> Optional[dict]:
        rec = self.records.get(identifier.strip().lower())
        if rec is None:
            return None
        return {"title": rec.get("title", ""), "abstract": rec.get("abstract", "")}


def resolve_metadata(connector: MetadataConnector, identifier: str) -> Optional[dict]:
    """Title/abstract for a DOI or ISSN, or None when the source has no record."""
    if not _valid_identifier(identifier):
        raise QueryValidationError(f"not a DOI or ISSN: {identifier!r}")
    return connector.resolve(identifier.strip().lower())


def dedup(stubs: list[DocumentStub]) -> list[DocumentStub]:
    """Drop duplicate stubs by store identity key, keeping first occurrences."""
    seen: set[str] = set()
    out: list[DocumentStub] = []
    for stub in stubs:
        key = dedup_key(stub.doi, stub.title)
        if key in seen:
            continue
        seen.add(key)
        out.append(stub)
    return out
