"""PDF text extraction backends: fixture replay and the built-in parser."""
from __future__ import annotations

import io

import pytest

from revpipe.pdftext import (
    ConversionError,
    FixtureExtractor,
    SimplePdfExtractor,
    pdf_to_text,
)

reportlab = pytest.importorskip("reportlab")
from reportlab.lib.pagesizes import A4  # noqa: E402
from reportlab.pdfgen import canvas  # noqa: E402


def render_pdf(pages: list[list[str]]) -> bytes:
    buf = io.BytesIO()
    c = canvas.Canvas(buf, pagesize=A4)
    for lines in pages:
        y = 800
        for line in lines:
            c.drawString(72, y, line)
            y -= 14
        c.showPage()
    c.save()
    return buf.getvalue()


class TestFixtureExtractor:
    def test_replays_registered_text(self, tmp_path):
        pdf = tmp_path / "a.pdf"
        pdf.write_bytes(b"%PDF-1.4 whatever")
        fx = FixtureExtractor()
        fx.register_file(pdf, "stored text")
        assert pdf_to_text(pdf, fx) == "stored text"

    def test_unknown_pdf_rejected(self, tmp_path):
        pdf = tmp_path / "a.pdf"
        pdf.write_bytes(b"%PDF-1.4 whatever")
        with pytest.raises(ConversionError):
            pdf_to_text(pdf, FixtureExtractor())

    def test_non_pdf_rejected_before_backend(self, tmp_path):
        path = tmp_path / "a.pdf"
        path.write_bytes(b"GIF89a not a pdf")
        with pytest.raises(ConversionError):
            pdf_to_text(path, FixtureExtractor())

    def test_from_dir(self, tmp_path):
        pdf = tmp_path / "a.pdf"
        pdf.write_bytes(b"%PDF-1.4 xyz")
        import hashlib
        key = hashlib.sha256(pdf.read_bytes()).hexdigest()
        (tmp_path / f"{key}.txt").write_text("dir text", encoding="utf-8")
        fx = FixtureExtractor.from_dir(tmp_path)
        assert pdf_to_text(pdf, fx) == "dir text"


class TestSimpleExtractor:
    def test_single_page_text(self, tmp_path):
        pdf = tmp_path / "p.pdf"
        pdf.write_bytes(render_pdf([["Abstract", "We studied brucellosis in cattle."]]))
        text = pdf_to_text(pdf)
        assert "Abstract" in text
        assert "We studied brucellosis in cattle." in text

    def test_pages_separated_by_form_feed(self, tmp_path):
        pdf = tmp_path / "p.pdf"
        pdf.write_bytes(render_pdf([["page one text"], ["page two text"]]))
        text = pdf_to_text(pdf)
        assert "\f" in text
        first, second = text.split("\f", 1)
        assert "page one text" in first
        assert "page two text" in second

    def test_empty_page_pdf_yields_empty_text(self, tmp_path):
        pdf = tmp_path / "p.pdf"
        pdf.write_bytes(render_pdf([[]]))
        assert pdf_to_text(pdf) == ""

    def test_escaped_parentheses(self, tmp_path):
        pdf = tmp_path / "p.pdf"
        pdf.write_bytes(render_pdf([["Tests found 1.72% (5/291) positive."]]))
        assert "(5/291)" in pdf_to_text(pdf)

    def test_garbage_after_magic_is_error_or_empty(self, tmp_path):
        pdf = tmp_path / "p.pdf"
        pdf.write_bytes(b"%PDF-1.4 then nothing useful")
        with pytest.raises(ConversionError):
            pdf_to_text(pdf, SimplePdfExtractor())
