"""Cleaning, sectioning and segmenting of extracted paper text.

Everything here is a pure function over strings; offsets always index the
cleaned text, so any span can be checked by slicing.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

SECTION_NAMES = (
    "abstract",
    "introduction",
    "methods",
    "results",
    "discussion",
    "conclusion",
    "references",
    "other",
)

# Heading phrase -> canonical section. Derived from common section titles;
# extend via the `headings` argument of segment_sections.
DEFAULT_HEADINGS: dict[str, str] = {
    "abstract": "abstract",
    "summary": "abstract",
    "introduction": "introduction",
    "background": "introduction",
    "methods": "methods",
    "method": "methods",
    "materials and methods": "methods",
    "material and methods": "methods",
    "methodology": "methods",
    "results": "results",
    "results and discussion": "results",
    "discussion": "discussion",
    "conclusion": "conclusion",
    "conclusions": "conclusion",
    "references": "references",
    "bibliography": "references",
    "literature cited": "references",
    # boundary-only headings: they end the preceding section and open `other`
    "keywords": "other",
    "key words": "other",
    "acknowledgements": "other",
    "acknowledgments": "other",
    "appendix": "other",
}

# Trailing-token abbreviations that never end a sentence.
DEFAULT_ABBREVIATIONS = (
    "e.g.", "i.e.", "et al.", "al.", "cf.", "vs.", "spp.", "sp.", "subsp.",
    "fig.", "figs.", "no.", "nos.", "approx.", "ca.", "dr.", "prof.", "st.",
)

MIN_SENTENCE_TOKENS = 9
MAX_SENTENCE_TOKENS = 25
SENTENCE_SAMPLE_SIZE = 150
CHUNK_SIZE = 3
CHUNK_SAMPLE_PER_SECTION = 25


class DocprocError(Exception):
    pass


@dataclass
class Section:
    name: str
    start: int
    end: int
    # sentence spans (global char offsets) and per-sentence token spans
    sentences: list[tuple[int, int]] = field(default_factory=list)
    tokens: list[list[tuple[int, int]]] = field(default_factory=list)


@dataclass
class SectionedDocument:
    doc_id: str
    text: str
    sections: list[Section]

    def section_text(self, name: str) -> str:
        """Concatenated text of all sections with this name."""
        return "\n".join(self.text[s.start:s.end] for s in self.sections if s.name == name)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "text": self.text,
            "sections": [
                {
                    "name": s.name,
                    "start": s.start,
                    "end": s.end,
                    "sentences": [list(span) for span in s.sentences],
                    "tokens": [[list(t) for t in toks] for toks in s.tokens],
                }
                for s in self.sections
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SectionedDocument":
        sections = [
            Section(
                name=s["name"],
                start=s["start"],
                end=s["end"],
                sentences=[tuple(span) for span in s["sentences"]],
                tokens=[[tuple(t) for t in toks] for toks in s["tokens"]],
            )
            for s in obj["sections"]
        ]
        return cls(doc_id=obj["doc_id"], text=obj["text"], sections=sections)


@dataclass
class AnnotationUnit:
    """One item shown to an annotator: a single sentence or a short chunk."""

    unit_id: str
    doc_id: str
    kind: str  # sentence | chunk
    section: str
    text: str
    token_spans: list[tuple[int, int]]  # char offsets within `text`
    sentence_indices: tuple[int, ...]  # provenance: sentence positions in section

    @property
    def tokens(self) -> list[str]:
        return [self.text[a:b] for a, b in self.token_spans]

    def to_json(self) -> dict:
        return {
            "unit_id": self.unit_id,
            "doc_id": self.doc_id,
            "kind": self.kind,
            "section": self.section,
            "text": self.text,
            "token_spans": [list(t) for t in self.token_spans],
            "sentence_indices": list(self.sentence_indices),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationUnit":
        return cls(
            unit_id=obj["unit_id"],
            doc_id=obj["doc_id"],
            kind=obj["kind"],
            section=obj["section"],
            text=obj["text"],
            token_spans=[tuple(t) for t in obj["token_spans"]],
            sentence_indices=tuple(obj["sentence_indices"]),
        )


# ----------------------------------------------------------------------
# cleaning

_PAGE_BREAK = "\f"


def _remove_repeated_lines(pages: list[str], min_pages: int = 3) -> list[str]:
    page_lines = [p.split("\n") for p in pages]
    counts: dict[str, set[int]] = {}
    for i, lines in enumerate(page_lines):
        for line in lines:
            if line.strip():
                counts.setdefault(line, set()).add(i)
    repeated = {line for line, where in counts.items() if len(where) >= min_pages}
    if not repeated:
        return pages
    return [
        "\n".join(line for line in lines if line not in repeated)
        for lines in page_lines
    ]


def clean_text(raw: str) -> str:
    """Normalize extractor output: line endings, hyphen wraps, repeated
    headers/footers (same line on >= 3 pages), whitespace runs, page marks."""
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    pages = text.split(_PAGE_BREAK)
    if len(pages) >= 3:
        pages = _remove_repeated_lines(pages)
    text = "\n".join(pages)
    # rejoin hyphenated line breaks until fixpoint so the pass is idempotent
    while True:
        joined = re.sub(r"(\w)-\n(\w)", r"\1\2", text)
        if joined == text:
            break
        text = joined
    text = re.sub(r"[ \t]+", " ", text)
    text = re.sub(r" ?\n ?", "\n", text)
    return text


# ----------------------------------------------------------------------
# section segmentation

def _heading_regex(headings: dict[str, str]) -> re.Pattern:
    phrases = sorted(headings, key=len, reverse=True)
    alt = "|".join(re.escape(p) for p in phrases)
    # optional "2." / "2)" numbering, the phrase (case-insensitive), optional
    # ":" or ".", then either end of line (own-line heading) or whitespace and
    # an uppercase letter/digit (heading merged with the first sentence); the
    # follow-set check stays case-sensitive so prose like "Results were"
    # does not register as a heading.
    return re.compile(
        rf"^(?:\d+(?:\.\d+)*[.)]?\s+)?((?i:{alt}))\s*[:.]?\s*(?=$|[A-Z0-9(\"])"
    )


def segment_sections(
    cleaned: str,
    doc_id: str = "",
    headings: Optional[dict[str, str]] = None,
    abbreviations: Sequence[str] = DEFAULT_ABBREVIATIONS,
) -> SectionedDocument:
    """Split cleaned text into named sections with sentence and token spans.

    Headings are matched case-insensitively on their own line or merged with
    the start of the first sentence; unmatched text (preamble, keyword
    blocks) lands in `other`.
    """
    table = DEFAULT_HEADINGS if headings is None else headings
    pattern = _heading_regex(table)

    sections: list[Section] = []
    boundaries: list[tuple[str, int, int]] = []  # (name, heading_start, content_start)
    offset = 0
    for line in cleaned.split("\n"):
        m = pattern.match(line)
        if m:
            name = table[m.group(1).lower()]
            if m.end() >= len(line):
                content_start = offset + len(line) + 1  # own-line heading
            else:
                content_start = offset + m.end()  # merged with first sentence
            boundaries.append((name, offset, min(content_start, len(cleaned))))
        offset += len(line) + 1

    def add_section(name: str, start: int, end: int) -> None:
        span = cleaned[start:end]
        lead = len(span) - len(span.lstrip())
        trail = len(span) - len(span.rstrip())
        start, end = start + lead, end - trail
        if end > start:
            sections.append(Section(name=name, start=start, end=end))

    if not boundaries:
        add_section("other", 0, len(cleaned))
    else:
        first_heading = boundaries[0][1]
        if first_heading > 0:
            add_section("other", 0, first_heading)
        for i, (name, _, content_start) in enumerate(boundaries):
            end = boundaries[i + 1][1] if i + 1 < len(boundaries) else len(cleaned)
            add_section(name, content_start, end)

    for section in sections:
        rel_sents = split_sentences(cleaned[section.start:section.end], abbreviations)
        section.sentences = [(a + section.start, b + section.start) for a, b in rel_sents]
        section.tokens = []
        for a, b in section.sentences:
            rel_toks = tokenize(cleaned[a:b])
            section.tokens.append([(ta + a, tb + a) for ta, tb in rel_toks])

    return SectionedDocument(doc_id=doc_id, text=cleaned, sections=sections)


# ----------------------------------------------------------------------
# sentences and tokens

def _build_abbrev_patterns(abbreviations: Sequence[str]) -> list[re.Pattern]:
    pats = []
    for abbr in abbreviations:
        pats.append(re.compile(r"(?:^|[\s(\[])" + re.escape(abbr) + r"$", re.IGNORECASE))
    return pats


_BOUNDARY_RE = re.compile(r"[.?!]+(?=(\s+)[A-Z])")


def split_sentences(
    text: str, abbreviations: Sequence[str] = DEFAULT_ABBREVIATIONS
) -> list[tuple[int, int]]:
    """Sentence char spans: split after .?! followed by whitespace and a
    capital, unless the trailing token is a known abbreviation."""
    if not text.strip():
        return []
    abbrev_pats = _build_abbrev_patterns(abbreviations)
    breaks: list[int] = []
    for m in _BOUNDARY_RE.finditer(text):
        head = text[: m.end()]
        if any(p.search(head) for p in abbrev_pats):
            continue
        breaks.append(m.end())
    spans: list[tuple[int, int]] = []
    start = 0
    for brk in breaks:
        spans.append((start, brk))
        start = brk
    spans.append((start, len(text)))
    out: list[tuple[int, int]] = []
    for a, b in spans:
        chunk = text[a:b]
        lead = len(chunk) - len(chunk.lstrip())
        trail = len(chunk) - len(chunk.rstrip())
        if b - trail > a + lead:
            out.append((a + lead, b - trail))
    return out


_TOKEN_RE = re.compile(r"\d+(?:[./]\d+)*%?|[^\W\d_]+|\S")


def tokenize(text: str) -> list[tuple[int, int]]:
    """Token char spans; numerals keep internal . / % ("1.72%", "5/291")."""
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def token_strings(text: str) -> list[str]:
    return [text[a:b] for a, b in tokenize(text)]


# ----------------------------------------------------------------------
# annotation unit sampling

def _unit_for_sentences(
    sdoc: SectionedDocument,
    kind: str,
    section_idx: int,
    sent_indices: Sequence[int],
) -> AnnotationUnit:
    section = sdoc.sections[section_idx]
    first, last = sent_indices[0], sent_indices[-1]
    start = section.sentences[first][0]
    end = section.sentences[last][1]
    text = sdoc.text[start:end]
    token_spans: list[tuple[int, int]] = []
    for si in sent_indices:
        token_spans.extend((a - start, b - start) for a, b in section.tokens[si])
    unit_id = f"{sdoc.doc_id}:{kind}:s{section_idx}.{first}-{last}"
    return AnnotationUnit(
        unit_id=unit_id,
        doc_id=sdoc.doc_id,
        kind=kind,
        section=section.name,
        text=text,
        token_spans=token_spans,
        sentence_indices=tuple(sent_indices),
    )


def all_chunks(
    sdoc: SectionedDocument,
    sections: tuple[str, ...] = ("abstract", "methods", "results"),
) -> list[AnnotationUnit]:
    """Every consecutive 3-sentence chunk of the given sections, in order."""
    units: list[AnnotationUnit] = []
    for si, section in enumerate(sdoc.sections):
        if section.name not in sections:
            continue
        n = len(section.sentences)
        for start in range(0, n, CHUNK_SIZE):
            idxs = list(range(start, min(start + CHUNK_SIZE, n)))
            units.append(_unit_for_sentences(sdoc, "chunk", si, idxs))
    return units


def sample_for_annotation(
    sdoc: SectionedDocument,
    kind: str,
    seed: int,
    sentence_sample: int = SENTENCE_SAMPLE_SIZE,
    chunk_sample: int = CHUNK_SAMPLE_PER_SECTION,
) -> list[AnnotationUnit]:
    """Select annotation units.

    sentence kind: every abstract sentence of >= 9 tokens plus up to
    ``sentence_sample`` sentences of 9-25 tokens drawn from methods+results.
    chunk kind: the whole abstract in consecutive 3-sentence chunks plus up
    to ``chunk_sample`` chunks from each of methods and results.  Sampling is
    uniform and deterministic for a given seed.
    """
    if kind not in ("sentence", "chunk"):
        raise DocprocError(f"unknown annotation kind {kind!r}")
    rng = random.Random(seed)
    units: list[AnnotationUnit] = []

    if kind == "sentence":
        pool: list[tuple[int, int]] = []
        for si, section in enumerate(sdoc.sections):
            for j, toks in enumerate(section.tokens):
                n = len(toks)
                if section.name == "abstract" and n >= MIN_SENTENCE_TOKENS:
                    units.append(_unit_for_sentences(sdoc, kind, si, [j]))
                elif section.name in ("methods", "results") and MIN_SENTENCE_TOKENS <= n <= MAX_SENTENCE_TOKENS:
                    pool.append((si, j))
        take = pool if len(pool) <= sentence_sample else sorted(rng.sample(range(len(pool)), sentence_sample))
        chosen = pool if take is pool else [pool[i] for i in take]
        for si, j in chosen:
            units.append(_unit_for_sentences(sdoc, kind, si, [j]))
        return units

    for si, section in enumerate(sdoc.sections):
        if section.name not in ("abstract", "methods", "results"):
            continue
        n_sents = len(section.sentences)
        chunks = [list(range(i, min(i + CHUNK_SIZE, n_sents))) for i in range(0, n_sents, CHUNK_SIZE)]
        if section.name == "abstract":
            chosen_chunks = chunks
        elif len(chunks) <= chunk_sample:
            chosen_chunks = chunks
        else:
            idx = sorted(rng.sample(range(len(chunks)), chunk_sample))
            chosen_chunks = [chunks[i] for i in idx]
        for chunk in chosen_chunks:
            units.append(_unit_for_sentences(sdoc, kind, si, chunk))
    return units
