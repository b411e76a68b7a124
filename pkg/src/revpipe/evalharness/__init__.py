"""Metrics and experiment protocols for the review pipeline."""
from .experiments import (
    CurvePoint,
    LabeledExample,
    ablate_volume,
    holdout_country,
    stratified_split,
    summarize,
    threshold_sweep,
    write_plot_json,
    write_points_csv,
)
from .metrics import (
    LabelPRF,
    MetricsError,
    ScreenMetrics,
    SpanScores,
    auc,
    screen_metrics,
    span_f1,
)
from .synth import PlantedFact, SynthConfig, SynthCorpus, SynthDoc, generate_corpus

__all__ = [
    "CurvePoint",
    "LabeledExample",
    "ablate_volume",
    "holdout_country",
    "stratified_split",
    "summarize",
    "threshold_sweep",
    "write_plot_json",
    "write_points_csv",
    "LabelPRF",
    "MetricsError",
    "ScreenMetrics",
    "SpanScores",
    "auc",
    "screen_metrics",
    "span_f1",
    "PlantedFact",
    "SynthConfig",
    "SynthCorpus",
    "SynthDoc",
    "generate_corpus",
]
