"""Systematic-review automation pipeline.

Search scholarly sources, fetch and section PDFs, screen documents with a
calibrated linear classifier plus human-review triage, extract structured
facts at sentence and phrase level, and emit the tabular review output.
"""

__version__ = "0.1.0"
