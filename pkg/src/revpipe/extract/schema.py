"""The 16-label annotation schema for veterinary prevalence extraction."""
from __future__ import annotations

LABELS = (
    "disease",
    "species",
    "region",
    "individual_prevalence",
    "diagnostic_test",
    "reference",
    "sample_type",
    "statistical_analysis",
    "age",
    "sample_size",
    "production_system",
    "ecosystem",
    "study_design",
    "study_date",
    "herd_prevalence",
    "mortality",
)

# The subset review experts care about most; reported separately by metrics.
PRIORITY_LABELS = (
    "disease",
    "species",
    "region",
    "individual_prevalence",
    "diagnostic_test",
    "sample_type",
    "sample_size",
    "study_date",
)

OUTSIDE = "O"


def tag_alphabet(labels: tuple[str, ...] = LABELS) -> tuple[str, ...]:
    """O plus B-/I- tags per label: 33 tags for the full schema."""
    tags = [OUTSIDE]
    for label in labels:
        tags.append(f"B-{label}")
        tags.append(f"I-{label}")
    return tuple(tags)


TAGS = tag_alphabet()
TAG_INDEX = {t: i for i, t in enumerate(TAGS)}
