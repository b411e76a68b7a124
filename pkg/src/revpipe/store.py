"""Durable project store for documents, decisions, snapshots, predictions and models.

Everything lives in a single SQLite file next to a directory of PDFs, so a
whole review project can be backed up by copying two paths.  Mutations are
serialized through one lock (single writer, many readers); a store instance
can be shared between threads.
"""
from __future__ import annotations

import json
import re
import sqlite3
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from hashlib import sha256
from pathlib import Path
from typing import Optional

SOURCE_DBS = ("scopus", "pubmed", "wos", "gscholar", "fixture")

STATUS_FOUND = "found"
STATUS_FETCHED = "fetched"
STATUS_CONVERTED = "converted"
STATUS_SCREENED_IN = "screened_in"
STATUS_SCREENED_OUT = "screened_out"
STATUS_NEEDS_REVIEW = "needs_review"
STATUS_EXTRACTED = "extracted"

STATUSES = (
    STATUS_FOUND,
    STATUS_FETCHED,
    STATUS_CONVERTED,
    STATUS_SCREENED_IN,
    STATUS_SCREENED_OUT,
    STATUS_NEEDS_REVIEW,
    STATUS_EXTRACTED,
)

# All three screening outcomes share one rank: a document moves forward into
# the screening stage and forward out of it.  Within the stage, needs_review
# may settle to screened_in/out, and model-routed documents may be re-routed
# when the confidence threshold changes (see set_status force_reroute).
_STATUS_RANK = {
    STATUS_FOUND: 0,
    STATUS_FETCHED: 1,
    STATUS_CONVERTED: 2,
    STATUS_SCREENED_IN: 3,
    STATUS_SCREENED_OUT: 3,
    STATUS_NEEDS_REVIEW: 3,
    STATUS_EXTRACTED: 4,
}

_SCREENING_STATUSES = (STATUS_SCREENED_IN, STATUS_SCREENED_OUT, STATUS_NEEDS_REVIEW)

_DOC_FIELDS = (
    "doc_id",
    "doi",
    "issn",
    "title",
    "abstract",
    "source_db",
    "country",
    "disease",
    "status",
    "pdf_path",
    "retrieved_at",
)


class StoreError(Exception):
    """Base error for store operations."""


class ValidationError(StoreError):
    """A record violates a store invariant."""


class NotFoundError(StoreError):
    """Referenced record does not exist."""


class IllegalTransition(StoreError):
    """A document status change would move backwards."""


def utc_now() -> str:
    """Current time as a UTC ISO-8601 string."""
    return datetime.now(timezone.utc).isoformat()


def normalize_doi(doi: Optional[str]) -> Optional[str]:
    """Lowercase and strip any ``https://doi.org/`` style prefix."""
    if doi is None:
        return None
    d = doi.strip().lower()
    for prefix in ("https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/", "doi:"):
        if d.startswith(prefix):
            d = d[len(prefix):]
            break
    return d or None


def title_key(title: str) -> str:
    """Case-folded, punctuation-stripped title used as the fallback dedup key."""
    return re.sub(r"[^a-z0-9]+", " ", title.casefold()).strip()


def dedup_key(doi: Optional[str], title: str) -> str:
    """Identity key: normalized DOI when present, else the normalized title."""
    d = normalize_doi(doi)
    if d:
        return "doi:" + d
    return "title:" + title_key(title)


@dataclass
class Document:
    title: str
    doc_id: str = ""
    doi: Optional[str] = None
    issn: Optional[str] = None
    abstract: str = ""
    source_db: str = "fixture"
    country: Optional[str] = None
    disease: Optional[str] = None
    status: str = STATUS_FOUND
    pdf_path: Optional[str] = None
    retrieved_at: str = ""

    def to_json(self) -> dict:
        return {name: getattr(self, name) for name in _DOC_FIELDS}

    @classmethod
    def from_json(cls, obj: dict) -> "Document":
        kwargs = {name: obj[name] for name in _DOC_FIELDS if obj.get(name) is not None}
        kwargs.setdefault("title", "")
        return cls(**kwargs)


@dataclass
class Decision:
    doc_id: str
    verdict: str  # include | exclude
    origin: str  # model | human
    confidence: Optional[float] = None
    decided_at: str = ""
    reviewer_id: Optional[str] = None


@dataclass
class Prediction:
    """Latest model scoring of a document; the basis for triage routing."""

    doc_id: str
    model_version: str
    p_include: float
    verdict: str
    confidence: float
    route: str  # auto | needs_review
    scored_at: str = ""


@dataclass
class DatasetSnapshot:
    snapshot_id: str
    members: tuple[tuple[str, str], ...]  # (doc_id, label) pairs, frozen
    created_at: str
    description: str = ""


@dataclass
class DocumentFilter:
    """Conjunctive filter over document fields; None fields match anything."""

    country: Optional[str] = None
    disease: Optional[str] = None
    source_db: Optional[str] = None
    status_in: Optional[tuple[str, ...]] = None
    doc_ids: Optional[tuple[str, ...]] = None

    def matches(self, doc: Document) -> bool:
        if self.country is not None and doc.country != self.country:
            return False
        if self.disease is not None and doc.disease != self.disease:
            return False
        if self.source_db is not None and doc.source_db != self.source_db:
            return False
        if self.status_in is not None and doc.status not in self.status_in:
            return False
        if self.doc_ids is not None and doc.doc_id not in self.doc_ids:
            return False
        return True


_SCHEMA = """
CREATE TABLE IF NOT EXISTS documents (
    doc_id TEXT PRIMARY KEY,
    dedup_key TEXT UNIQUE NOT NULL,
    doi TEXT,
    issn TEXT,
    title TEXT NOT NULL,
    abstract TEXT NOT NULL DEFAULT '',
    source_db TEXT NOT NULL,
    country TEXT,
    disease TEXT,
    status TEXT NOT NULL,
    pdf_path TEXT,
    retrieved_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS decisions (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    doc_id TEXT NOT NULL REFERENCES documents(doc_id),
    verdict TEXT NOT NULL,
    origin TEXT NOT NULL,
    confidence REAL,
    decided_at TEXT NOT NULL,
    reviewer_id TEXT,
    superseded INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS predictions (
    doc_id TEXT PRIMARY KEY REFERENCES documents(doc_id),
    model_version TEXT NOT NULL,
    p_include REAL NOT NULL,
    verdict TEXT NOT NULL,
    confidence REAL NOT NULL,
    route TEXT NOT NULL,
    scored_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS snapshots (
    snapshot_id TEXT PRIMARY KEY,
    created_at TEXT NOT NULL,
    description TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS snapshot_members (
    snapshot_id TEXT NOT NULL REFERENCES snapshots(snapshot_id),
    doc_id TEXT NOT NULL,
    label TEXT NOT NULL,
    PRIMARY KEY (snapshot_id, doc_id)
);
CREATE TABLE IF NOT EXISTS models (
    version_id TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    created_at TEXT NOT NULL,
    payload BLOB NOT NULL,
    active INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS config (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


class ProjectStore:
    """Single-file project store; safe to share between threads."""

    def __init__(self, path: str | Path, pdf_dir: Optional[str | Path] = None):
        self.path = Path(path)
        self.pdf_dir = Path(pdf_dir) if pdf_dir else self.path.with_suffix(".pdfs")
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(str(self.path), check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        with self._lock, self._conn:
            self._conn.executescript(_SCHEMA)

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # ------------------------------------------------------------------
    # documents

    def put_document(self, doc: Document) -> str:
        """Insert a document, deduplicating on normalized DOI / title key.

        Returns the id of the stored record: a fresh id for new documents,
        the existing id when the dedup key is already present.
        """
        if not doc.title or not doc.title.strip():
            raise ValidationError("document title must be non-empty")
        if doc.source_db not in SOURCE_DBS:
            raise ValidationError(f"unknown source_db {doc.source_db!r}")
        if doc.status not in STATUSES:
            raise ValidationError(f"unknown status {doc.status!r}")
        key = dedup_key(doc.doi, doc.title)
        with self._lock:
            row = self._conn.execute(
                "SELECT doc_id FROM documents WHERE dedup_key = ?", (key,)
            ).fetchone()
            if row is not None:
                return row["doc_id"]
            doc_id = doc.doc_id or "doc-" + sha256(key.encode("utf-8")).hexdigest()[:16]
            if self._conn.execute(
                "SELECT 1 FROM documents WHERE doc_id = ?", (doc_id,)
            ).fetchone():
                raise ValidationError(f"doc_id {doc_id!r} already exists with a different dedup key")
            with self._conn:
                self._conn.execute(
                    "INSERT INTO documents (doc_id, dedup_key, doi, issn, title, abstract,"
                    " source_db, country, disease, status, pdf_path, retrieved_at)"
                    " VALUES (?,?,?,?,?,?,?,?,?,?,?,?)",
                    (
                        doc_id,
                        key,
                        normalize_doi(doc.doi),
                        doc.issn,
                        doc.title,
                        doc.abstract or "",
                        doc.source_db,
                        doc.country,
                        doc.disease,
                        doc.status,
                        doc.pdf_path,
                        doc.retrieved_at or utc_now(),
                    ),
                )
            return doc_id

    def get_document(self, doc_id: str) -> Document:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM documents WHERE doc_id = ?", (doc_id,)
            ).fetchone()
        if row is None:
            raise NotFoundError(f"no document {doc_id!r}")
        return self._doc_from_row(row)

    @staticmethod
    def _doc_from_row(row: sqlite3.Row) -> Document:
        return Document(
            doc_id=row["doc_id"],
            doi=row["doi"],
            issn=row["issn"],
            title=row["title"],
            abstract=row["abstract"],
            source_db=row["source_db"],
            country=row["country"],
            disease=row["disease"],
            status=row["status"],
            pdf_path=row["pdf_path"],
            retrieved_at=row["retrieved_at"],
        )

    def list_documents(self, flt: Optional[DocumentFilter] = None) -> list[Document]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT * FROM documents ORDER BY rowid"
            ).fetchall()
        docs = [self._doc_from_row(r) for r in rows]
        if flt is not None:
            docs = [d for d in docs if flt.matches(d)]
        return docs

    def set_status(
        self,
        doc_id: str,
        status: str,
        *,
        force_reroute: bool = False,
        human_decision: bool = False,
    ) -> None:
        """Move a document's lifecycle status forward.

        ``force_reroute`` permits moves between the three screening statuses
        for model-routed documents when the triage threshold changes; it never
        overrides a human decision and never leaves the screening stage.
        ``human_decision`` marks a transition driven by a (possibly
        superseding) human verdict, which may flip screened_in/screened_out.
        """
        if status not in STATUSES:
            raise ValidationError(f"unknown status {status!r}")
        with self._lock:
            doc = self.get_document(doc_id)
            if doc.status == status:
                return
            old_rank, new_rank = _STATUS_RANK[doc.status], _STATUS_RANK[status]
            legal = new_rank > old_rank
            if doc.status == STATUS_NEEDS_REVIEW and status in (STATUS_SCREENED_IN, STATUS_SCREENED_OUT):
                legal = True
            in_stage = doc.status in _SCREENING_STATUSES and status in _SCREENING_STATUSES
            if human_decision and in_stage:
                legal = True
            if force_reroute and in_stage and self.active_human_decision(doc_id) is None:
                legal = True
            if not legal:
                raise IllegalTransition(f"{doc.status} -> {status} for {doc_id}")
            with self._conn:
                self._conn.execute(
                    "UPDATE documents SET status = ? WHERE doc_id = ?", (status, doc_id)
                )

    def set_pdf_path(self, doc_id: str, pdf_path: str) -> None:
        with self._lock:
            self.get_document(doc_id)
            with self._conn:
                self._conn.execute(
                    "UPDATE documents SET pdf_path = ? WHERE doc_id = ?", (pdf_path, doc_id)
                )

    # ------------------------------------------------------------------
    # decisions

    def record_decision(self, d: Decision) -> None:
        """Record an include/exclude decision and update document status.

        Human decisions supersede earlier human decisions for the same
        document; they carry no confidence.  Model decisions always carry one.
        """
        if d.verdict not in ("include", "exclude"):
            raise ValidationError(f"unknown verdict {d.verdict!r}")
        if d.origin not in ("model", "human"):
            raise ValidationError(f"unknown origin {d.origin!r}")
        if d.origin == "model":
            if d.confidence is None:
                raise ValidationError("model decisions must carry a confidence")
            if not (0.5 <= d.confidence <= 1.0):
                raise ValidationError(f"confidence {d.confidence} outside [0.5, 1.0]")
        elif d.confidence is not None:
            raise ValidationError("human decisions carry no confidence")
        with self._lock:
            doc = self.get_document(d.doc_id)  # raises NotFoundError
            status = STATUS_SCREENED_IN if d.verdict == "include" else STATUS_SCREENED_OUT
            with self._conn:
                if d.origin == "human":
                    self._conn.execute(
                        "UPDATE decisions SET superseded = 1 WHERE doc_id = ? AND origin = 'human'",
                        (d.doc_id,),
                    )
                self._conn.execute(
                    "INSERT INTO decisions (doc_id, verdict, origin, confidence, decided_at, reviewer_id)"
                    " VALUES (?,?,?,?,?,?)",
                    (
                        d.doc_id,
                        d.verdict,
                        d.origin,
                        d.confidence,
                        d.decided_at or utc_now(),
                        d.reviewer_id,
                    ),
                )
            if doc.status != status and doc.status != STATUS_EXTRACTED:
                self.set_status(d.doc_id, status, human_decision=(d.origin == "human"))

    def active_human_decision(self, doc_id: str) -> Optional[Decision]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM decisions WHERE doc_id = ? AND origin = 'human' AND superseded = 0"
                " ORDER BY id DESC LIMIT 1",
                (doc_id,),
            ).fetchone()
        if row is None:
            return None
        return Decision(
            doc_id=row["doc_id"],
            verdict=row["verdict"],
            origin=row["origin"],
            confidence=row["confidence"],
            decided_at=row["decided_at"],
            reviewer_id=row["reviewer_id"],
        )

    def supersede_model_decisions(self, doc_id: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE decisions SET superseded = 1 WHERE doc_id = ? AND origin = 'model'",
                (doc_id,),
            )

    def labeled_docs(self, flt: Optional[DocumentFilter] = None) -> list[tuple[str, str]]:
        """(doc_id, label) for every document with an active human decision."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT doc_id, verdict FROM decisions"
                " WHERE origin = 'human' AND superseded = 0 ORDER BY id"
            ).fetchall()
            pairs = [(r["doc_id"], r["verdict"]) for r in rows]
        if flt is not None:
            docs = {d.doc_id for d in self.list_documents(flt)}
            pairs = [(i, v) for i, v in pairs if i in docs]
        return pairs

    def human_decision_count(self) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT COUNT(*) AS n FROM decisions WHERE origin = 'human'"
            ).fetchone()
        return int(row["n"])

    def max_human_decision_id(self) -> int:
        with self._lock:
            row = self._conn.execute(
                "SELECT COALESCE(MAX(id), 0) AS m FROM decisions WHERE origin = 'human'"
            ).fetchone()
        return int(row["m"])

    # ------------------------------------------------------------------
    # predictions

    def record_prediction(self, p: Prediction) -> None:
        with self._lock:
            self.get_document(p.doc_id)
            with self._conn:
                self._conn.execute(
                    "INSERT INTO predictions (doc_id, model_version, p_include, verdict,"
                    " confidence, route, scored_at) VALUES (?,?,?,?,?,?,?)"
                    " ON CONFLICT(doc_id) DO UPDATE SET model_version=excluded.model_version,"
                    " p_include=excluded.p_include, verdict=excluded.verdict,"
                    " confidence=excluded.confidence, route=excluded.route, scored_at=excluded.scored_at",
                    (p.doc_id, p.model_version, p.p_include, p.verdict, p.confidence,
                     p.route, p.scored_at or utc_now()),
                )

    def get_prediction(self, doc_id: str) -> Optional[Prediction]:
        with self._lock:
            row = self._conn.execute(
                "SELECT * FROM predictions WHERE doc_id = ?", (doc_id,)
            ).fetchone()
        if row is None:
            return None
        return Prediction(
            doc_id=row["doc_id"],
            model_version=row["model_version"],
            p_include=row["p_include"],
            verdict=row["verdict"],
            confidence=row["confidence"],
            route=row["route"],
            scored_at=row["scored_at"],
        )

    def queue(self, limit: Optional[int] = None, offset: int = 0) -> list[tuple[Document, Prediction]]:
        """Documents awaiting review, most uncertain first, stable order."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT d.doc_id FROM documents d JOIN predictions p ON p.doc_id = d.doc_id"
                " WHERE d.status = ? ORDER BY p.confidence ASC, d.doc_id ASC",
                (STATUS_NEEDS_REVIEW,),
            ).fetchall()
        ids = [r["doc_id"] for r in rows]
        if offset:
            ids = ids[offset:]
        if limit is not None:
            ids = ids[:limit]
        out = []
        for doc_id in ids:
            pred = self.get_prediction(doc_id)
            if pred is not None:
                out.append((self.get_document(doc_id), pred))
        return out

    # ------------------------------------------------------------------
    # snapshots

    def snapshot_training_set(
        self, flt: Optional[DocumentFilter] = None, description: str = ""
    ) -> DatasetSnapshot:
        """Freeze the current labeled set (active human decisions) as a snapshot."""
        with self._lock:
            pairs = self.labeled_docs(flt)
            if not pairs:
                raise ValidationError("filter selects no labeled documents")
            snapshot_id = "snap-" + uuid.uuid4().hex[:12]
            created = utc_now()
            with self._conn:
                self._conn.execute(
                    "INSERT INTO snapshots (snapshot_id, created_at, description) VALUES (?,?,?)",
                    (snapshot_id, created, description),
                )
                self._conn.executemany(
                    "INSERT INTO snapshot_members (snapshot_id, doc_id, label) VALUES (?,?,?)",
                    [(snapshot_id, i, v) for i, v in pairs],
                )
        return DatasetSnapshot(snapshot_id, tuple(pairs), created, description)

    def get_snapshot(self, snapshot_id: str) -> DatasetSnapshot:
        with self._lock:
            head = self._conn.execute(
                "SELECT * FROM snapshots WHERE snapshot_id = ?", (snapshot_id,)
            ).fetchone()
            if head is None:
                raise NotFoundError(f"no snapshot {snapshot_id!r}")
            rows = self._conn.execute(
                "SELECT doc_id, label FROM snapshot_members WHERE snapshot_id = ? ORDER BY rowid",
                (snapshot_id,),
            ).fetchall()
        return DatasetSnapshot(
            snapshot_id,
            tuple((r["doc_id"], r["label"]) for r in rows),
            head["created_at"],
            head["description"],
        )

    # ------------------------------------------------------------------
    # model artifacts

    def save_model(self, kind: str, payload: bytes, *, activate: bool = False) -> str:
        version_id = f"{kind}-" + uuid.uuid4().hex[:12]
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO models (version_id, kind, created_at, payload, active) VALUES (?,?,?,?,0)",
                (version_id, kind, utc_now(), payload),
            )
            if activate:
                self._conn.execute("UPDATE models SET active = 0 WHERE kind = ?", (kind,))
                self._conn.execute(
                    "UPDATE models SET active = 1 WHERE version_id = ?", (version_id,)
                )
        return version_id

    def activate_model(self, version_id: str) -> None:
        with self._lock:
            row = self._conn.execute(
                "SELECT kind FROM models WHERE version_id = ?", (version_id,)
            ).fetchone()
            if row is None:
                raise NotFoundError(f"no model {version_id!r}")
            with self._conn:
                self._conn.execute("UPDATE models SET active = 0 WHERE kind = ?", (row["kind"],))
                self._conn.execute("UPDATE models SET active = 1 WHERE version_id = ?", (version_id,))

    def active_model(self, kind: str) -> Optional[tuple[str, bytes]]:
        with self._lock:
            row = self._conn.execute(
                "SELECT version_id, payload FROM models WHERE kind = ? AND active = 1", (kind,)
            ).fetchone()
        if row is None:
            return None
        return row["version_id"], row["payload"]

    # ------------------------------------------------------------------
    # config

    def get_config(self, key: str, default: Optional[str] = None) -> Optional[str]:
        with self._lock:
            row = self._conn.execute("SELECT value FROM config WHERE key = ?", (key,)).fetchone()
        return default if row is None else row["value"]

    def set_config(self, key: str, value: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO config (key, value) VALUES (?,?)"
                " ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (key, value),
            )

    # ------------------------------------------------------------------
    # interchange

    def export_jsonl(self, fh) -> int:
        """Write one document JSON object per line; returns the count."""
        n = 0
        for doc in self.list_documents():
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False) + "\n")
            n += 1
        return n

    def import_jsonl(self, fh) -> int:
        """Read documents from JSON Lines; returns the number of new records."""
        n = 0
        before = {d.doc_id for d in self.list_documents()}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = Document.from_json(json.loads(line))
            doc_id = self.put_document(doc)
            if doc_id not in before:
                n += 1
                before.add(doc_id)
        return n
