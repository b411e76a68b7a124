"""PDF to raw text with pluggable extraction backends.

The built-in extractor handles straightforward digitally-born PDFs (Flate or
plain content streams, Tj/TJ text operators) and is enough for fixture and
desk use; anything heavier should go through an external backend registered
behind the same interface.  The fixture backend replays stored text for known
PDF bytes so tests never depend on a real extractor.
"""
from __future__ import annotations

import base64
import re
import zlib
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path
from typing import Protocol

PDF_MAGIC = b"%PDF"
PAGE_BREAK = "\f"


class ConversionError(Exception):
    pass


class TextExtractor(Protocol):
    def extract(self, pdf_bytes: bytes) -> str:
        ...


def pdf_to_text(path: str | Path, extractor: "TextExtractor | None" = None) -> str:
    """Extractor output for one PDF file, verbatim.

    Raises ConversionError when the file lacks the %PDF magic or the backend
    cannot decode it.
    """
    data = Path(path).read_bytes()
    if not data.startswith(PDF_MAGIC):
        raise ConversionError(f"{path}: not a PDF (missing %PDF header)")
    backend = extractor or SimplePdfExtractor()
    return backend.extract(data)


@dataclass
class FixtureExtractor:
    """Maps PDF bytes (by content hash) to stored text."""

    texts: dict[str, str] = field(default_factory=dict)

    def register(self, pdf_bytes: bytes, text: str) -> None:
        self.texts[sha256(pdf_bytes).hexdigest()] = text

    def register_file(self, pdf_path: str | Path, text: str) -> None:
        self.register(Path(pdf_path).read_bytes(), text)

    @classmethod
    def from_dir(cls, fixture_dir: str | Path) -> "FixtureExtractor":
        """Load ``<sha256>.txt`` files from a directory."""
        fx = cls()
        for path in sorted(Path(fixture_dir).glob("*.txt")):
            fx.texts[path.stem] = path.read_text(encoding="utf-8")
        return fx

    def extract(self, pdf_bytes: bytes) -> str:
        key = sha256(pdf_bytes).hexdigest()
        if key not in self.texts:
            raise ConversionError(f"no fixture text recorded for PDF {key[:12]}")
        return self.texts[key]


_STREAM_KEYWORD_RE = re.compile(rb"stream\r?\n")
_TEXT_OP_RE = re.compile(
    rb"\((?:[^()\\]|\\.)*\)\s*Tj"  # (string) Tj
    rb"|\[(?:[^\]\\]|\\.)*\]\s*TJ"  # [(s1) -250 (s2)] TJ
    rb"|T\*|TD|Td|ET",  # line movements / end of text block
)
_STRING_RE = re.compile(rb"\((?:[^()\\]|\\.)*\)")

_ESCAPES = {
    b"n": b"\n", b"r": b"\r", b"t": b"\t", b"b": b"\b", b"f": b"\f",
    b"(": b"(", b")": b")", b"\\": b"\\",
}


def _decode_pdf_string(raw: bytes) -> str:
    """Literal string between parentheses with backslash escapes resolved."""
    out = bytearray()
    i = 0
    while i < len(raw):
        c = raw[i:i + 1]
        if c == b"\\" and i + 1 < len(raw):
            nxt = raw[i + 1:i + 2]
            if nxt in _ESCAPES:
                out += _ESCAPES[nxt]
                i += 2
                continue
            if nxt.isdigit():  # octal \ddd
                j = i + 1
                digits = b""
                while j < len(raw) and len(digits) < 3 and raw[j:j + 1].isdigit():
                    digits += raw[j:j + 1]
                    j += 1
                out.append(int(digits, 8) & 0xFF)
                i = j
                continue
            i += 1
            continue
        out += c
        i += 1
    return out.decode("latin-1")


class SimplePdfExtractor:
    """Best-effort text extraction for uncomplicated PDFs.

    Walks content streams in file order, inflating FlateDecode data, and
    emits text-show operator strings; each content stream that draws text is
    treated as one page, separated by form feeds.
    """

    def extract(self, pdf_bytes: bytes) -> str:
        pages: list[str] = []
        saw_stream = False
        for m in _STREAM_KEYWORD_RE.finditer(pdf_bytes):
            end = pdf_bytes.find(b"endstream", m.end())
            if end < 0:
                continue
            body = pdf_bytes[m.end():end].rstrip(b"\r\n")
            obj_start = pdf_bytes.rfind(b"obj", 0, m.start())
            header = pdf_bytes[max(obj_start, 0):m.start()]
            saw_stream = True
            body = self._decode_filters(header, body)
            if body is None or b"BT" not in body:
                continue
            pages.append(self._page_text(body))
        if not pages:
            if not saw_stream and b"/Pages" not in pdf_bytes:
                raise ConversionError("no readable content streams in PDF")
            return ""
        return PAGE_BREAK.join(pages)

    @staticmethod
    def _decode_filters(header: bytes, body: bytes) -> bytes | None:
        """Apply the filter chain in order; None when an encoding is unsupported."""
        named = re.findall(rb"/(?:ASCII85Decode|FlateDecode|ASCIIHexDecode|LZWDecode|"
                           rb"RunLengthDecode|DCTDecode|CCITTFaxDecode|JBIG2Decode|"
                           rb"JPXDecode|Crypt)", header)
        try:
            for filt in named:
                if filt == b"/ASCII85Decode":
                    body = base64.a85decode(body, adobe=True)
                elif filt == b"/FlateDecode":
                    body = zlib.decompress(body)
                else:
                    return None
        except (ValueError, zlib.error):
            return None
        return body

    @staticmethod
    def _page_text(content: bytes) -> str:
        lines: list[str] = []
        current: list[str] = []
        for m in _TEXT_OP_RE.finditer(content):
            op = m.group(0)
            if op in (b"T*", b"TD", b"Td", b"ET"):
                if current:
                    lines.append("".join(current))
                    current = []
                continue
            parts = [_decode_pdf_string(s[1:-1]) for s in _STRING_RE.findall(op)]
            current.append("".join(parts))
        if current:
            lines.append("".join(current))
        return "\n".join(lines)
