"""Aggregate extracted spans into the tabular review output.

One output row per prevalence-type measurement; context labels (disease,
species, test, ...) attach from the same annotation unit first, falling back
to the nearest preceding unit in the same section.  Column names and order
follow the gold-standard review sheet verbatim, quirks included.
"""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .extract.bio import SpanAnnotation

logger = logging.getLogger(__name__)

COLUMNS = (
    "ROW_NUMBER",
    "IDENTIFIER",
    "YEAR_PUBLICATION",
    "REFERENCE",
    "START_DATE_DATA",
    "END_DATE_DATA",
    "STATE",
    "ECOSYSTEM",
    "PRODUCTION_SYSTEM",
    "SPECIES",
    "AGE",
    "AGE_DETAIL",
    "DISEASE",
    "SAMPLE",
    "DIAGNOSTIC_TEST",
    "MEASUREMENT",
    "NUMBER_POSITIVE",
    "NUMBER_TESTED",
    "PERCENTAGE",
    "CALCULATION",
    "COMMENTS",
    "SOURCE",
)

# the review sheet spells it "Prevalance"; kept verbatim for compatibility
MEASUREMENT_NAMES = {
    "individual_prevalence": "Individual Prevalance",
    "herd_prevalence": "Herd Prevalance",
    "mortality": "Individual Mortality",
}

PREVALENCE_LABELS = tuple(MEASUREMENT_NAMES)

CONTEXT_LABELS = (
    "disease",
    "species",
    "region",
    "diagnostic_test",
    "sample_type",
    "sample_size",
    "study_date",
    "age",
    "ecosystem",
    "production_system",
)

_CONTEXT_COLUMN = {
    "disease": "DISEASE",
    "species": "SPECIES",
    "region": "STATE",
    "diagnostic_test": "DIAGNOSTIC_TEST",
    "sample_type": "SAMPLE",
    "age": "AGE",
    "ecosystem": "ECOSYSTEM",
    "production_system": "PRODUCTION_SYSTEM",
}


@dataclass
class MeasurementGroup:
    """One prevalence-type span plus the context spans that describe it."""

    doc_id: str
    unit_id: str
    measurement: SpanAnnotation
    context: dict[str, SpanAnnotation] = field(default_factory=dict)
    unit_text: str = ""


def group_measurements(
    doc_id: str,
    spans: Sequence[SpanAnnotation],
    unit_order: Optional[Sequence[str]] = None,
    unit_sections: Optional[dict[str, str]] = None,
    unit_texts: Optional[dict[str, str]] = None,
) -> list[MeasurementGroup]:
    """One group per prevalence-type span, in document order.

    ``unit_order`` fixes document order of units (defaults to first-seen
    order of the spans); ``unit_sections`` confines context fallback to the
    same section when provided.
    """
    if unit_order is None:
        unit_order = list(dict.fromkeys(s.unit_id for s in spans))
    order_idx = {u: i for i, u in enumerate(unit_order)}
    by_unit: dict[str, list[SpanAnnotation]] = {u: [] for u in unit_order}
    for s in spans:
        by_unit.setdefault(s.unit_id, []).append(s)

    groups: list[MeasurementGroup] = []
    for unit_id in unit_order:
        for span in by_unit.get(unit_id, []):
            if span.label not in PREVALENCE_LABELS:
                continue
            group = MeasurementGroup(
                doc_id=doc_id,
                unit_id=unit_id,
                measurement=span,
                unit_text=(unit_texts or {}).get(unit_id, ""),
            )
            for label in CONTEXT_LABELS:
                found = _find_context(label, unit_id, by_unit, unit_order, order_idx, unit_sections)
                if found is not None:
                    group.context[label] = found
            groups.append(group)
    return groups


def _find_context(
    label: str,
    unit_id: str,
    by_unit: dict[str, list[SpanAnnotation]],
    unit_order: Sequence[str],
    order_idx: dict[str, int],
    unit_sections: Optional[dict[str, str]],
) -> Optional[SpanAnnotation]:
    for s in by_unit.get(unit_id, []):
        if s.label == label:
            return s
    start = order_idx.get(unit_id)
    if start is None:
        return None
    section = (unit_sections or {}).get(unit_id)
    for j in range(start - 1, -1, -1):
        prev = unit_order[j]
        if unit_sections is not None and unit_sections.get(prev) != section:
            continue
        for s in by_unit.get(prev, []):
            if s.label == label:
                return s
    return None


_RATIO_RE = re.compile(r"(\d+)\s*/\s*(\d+)")
_PERCENT_RE = re.compile(r"(\d+(?:\.\d+)?)\s*%")
_YEAR_RE = re.compile(r"\b(1[89]\d{2}|20\d{2})\b")
_INT_RE = re.compile(r"\d+")


def parse_measurement_numbers(text: str) -> tuple[Optional[str], Optional[str], Optional[str]]:
    """(number_positive, number_tested, percentage) parsed from span text.

    ``a/b`` fills positive/tested; ``x%`` fills the percentage; when only the
    ratio is present the percentage is computed to two decimals.
    """
    pos = tested = pct = None
    m = _RATIO_RE.search(text)
    if m:
        pos, tested = m.group(1), m.group(2)
    m = _PERCENT_RE.search(text)
    if m:
        pct = m.group(1)
    if pct is None and pos is not None and tested is not None and int(tested) != 0:
        pct = f"{100.0 * int(pos) / int(tested):.2f}"
    return pos, tested, pct


def _blank_row() -> dict[str, str]:
    return {c: "" for c in COLUMNS}


def render_rows(
    doc_id: str,
    groups: Sequence[MeasurementGroup],
    identifier: Optional[str] = None,
    reference: Optional[str] = None,
    year: Optional[str] = None,
    start_row: int = 1,
) -> list[dict[str, str]]:
    """Rows keyed by column name; ROW_NUMBER counts from ``start_row``.

    ``identifier`` defaults to "<reference>; <year>" when both are known,
    else the document id.  Unparseable numeric spans leave their cells blank
    with a logged warning; rendering never raises on span content.
    """
    if identifier is None:
        identifier = f"{reference}; {year}" if reference and year else doc_id
    rows: list[dict[str, str]] = []
    for n, group in enumerate(groups, start=start_row):
        row = _blank_row()
        row["ROW_NUMBER"] = str(n)
        row["IDENTIFIER"] = identifier
        row["YEAR_PUBLICATION"] = year or ""
        row["REFERENCE"] = reference or ""
        row["SOURCE"] = "LITERATURE"
        row["MEASUREMENT"] = MEASUREMENT_NAMES[group.measurement.label]
        row["COMMENTS"] = group.unit_text

        pos, tested, pct = parse_measurement_numbers(group.measurement.text)
        if pos is None and tested is None and pct is None:
            logger.warning(
                "doc %s unit %s: no numbers parsed from %r",
                doc_id, group.unit_id, group.measurement.text,
            )
        row["NUMBER_POSITIVE"] = pos or ""
        row["NUMBER_TESTED"] = tested or ""
        row["PERCENTAGE"] = pct or ""

        for label, span in group.context.items():
            if label == "study_date":
                years = _YEAR_RE.findall(span.text)
                if years:
                    row["START_DATE_DATA"] = years[0]
                    row["END_DATE_DATA"] = years[-1]
                else:
                    row["START_DATE_DATA"] = span.text
            elif label == "sample_size":
                # backfill the tested count for prevalence rows only; the
                # review sheet leaves mortality counts blank
                if not row["NUMBER_TESTED"] and group.measurement.label != "mortality":
                    m = _INT_RE.search(span.text)
                    if m:
                        row["NUMBER_TESTED"] = m.group(0)
                    else:
                        logger.warning(
                            "doc %s unit %s: no count parsed from %r",
                            doc_id, group.unit_id, span.text,
                        )
            else:
                row[_CONTEXT_COLUMN[label]] = span.text
        rows.append(row)
    return rows


def write_csv(rows: Sequence[dict[str, str]], path: str | Path) -> None:
    """RFC-4180 CSV with the exact column header, UTF-8, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in COLUMNS})


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]
