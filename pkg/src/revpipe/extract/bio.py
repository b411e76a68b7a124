"""BIO tag encoding/decoding for token spans, plus the CoNLL-style corpus format."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .schema import OUTSIDE


class BioError(Exception):
    pass


@dataclass(frozen=True)
class SpanAnnotation:
    """A labeled token range [start, end) inside one annotation unit."""

    unit_id: str
    label: str
    start: int
    end: int
    text: str = ""

    def key(self) -> tuple[str, str, int, int]:
        return (self.unit_id, self.label, self.start, self.end)

    def to_json(self) -> dict:
        return {"unit_id": self.unit_id, "label": self.label,
                "start": self.start, "end": self.end, "text": self.text}

    @classmethod
    def from_json(cls, obj: dict) -> "SpanAnnotation":
        return cls(unit_id=obj["unit_id"], label=obj["label"],
                   start=obj["start"], end=obj["end"], text=obj.get("text", ""))


def encode_bio(n_tokens: int, spans: Sequence[tuple[str, int, int]]) -> list[str]:
    """Tags for non-overlapping (label, start, end) spans over n_tokens."""
    tags = [OUTSIDE] * n_tokens
    ordered = sorted(spans, key=lambda s: (s[1], s[2]))
    prev_end = 0
    for label, start, end in ordered:
        if not (0 <= start < end <= n_tokens):
            raise BioError(f"span {label}[{start},{end}) outside 0..{n_tokens}")
        if start < prev_end:
            raise BioError(f"span {label}[{start},{end}) overlaps a previous span")
        prev_end = end
        tags[start] = f"B-{label}"
        for i in range(start + 1, end):
            tags[i] = f"I-{label}"
    return tags


def decode_bio(tags: Sequence[str]) -> list[tuple[str, int, int]]:
    """Spans from tags; an I- after O or a different label opens a new span."""
    spans: list[tuple[str, int, int]] = []
    open_label: str | None = None
    open_start = 0

    def close(end: int) -> None:
        nonlocal open_label
        if open_label is not None:
            spans.append((open_label, open_start, end))
            open_label = None

    for i, tag in enumerate(tags):
        if tag == OUTSIDE:
            close(i)
            continue
        kind, _, label = tag.partition("-")
        if kind == "B" or open_label != label:
            close(i)
            open_label = label
            open_start = i
    close(len(tags))
    return spans


# ----------------------------------------------------------------------
# CoNLL-style interchange: `#unit <id>`, then token<TAB>tag lines, blank
# line between units.

def write_conll(path: str | Path, units: Iterable[tuple[str, Sequence[str], Sequence[str]]]) -> None:
    lines: list[str] = []
    for unit_id, tokens, tags in units:
        if len(tokens) != len(tags):
            raise BioError(f"unit {unit_id}: {len(tokens)} tokens vs {len(tags)} tags")
        lines.append(f"#unit {unit_id}")
        for token, tag in zip(tokens, tags):
            lines.append(f"{token}\t{tag}")
        lines.append("")
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def read_conll(path: str | Path) -> list[tuple[str, list[str], list[str]]]:
    units: list[tuple[str, list[str], list[str]]] = []
    unit_id = ""
    tokens: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        nonlocal unit_id, tokens, tags
        if tokens:
            units.append((unit_id, tokens, tags))
        unit_id, tokens, tags = "", [], []

    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), 1):
        if not line.strip():
            flush()
            continue
        if line.startswith("#unit "):
            flush()
            unit_id = line[len("#unit "):].strip()
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise BioError(f"line {lineno}: expected token<TAB>tag, got {line!r}")
        tokens.append(parts[0])
        tags.append(parts[1])
    flush()
    return units
