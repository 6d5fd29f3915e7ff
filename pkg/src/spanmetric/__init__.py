"""Desk-scale MT quality metric with error spans, plus its evaluation suite."""

__version__ = "0.1.0"

from .annotations import (
    ErrorSpan,
    Segment,
    Severity,
    TokenTags,
    error_penalty,
    mqm_score,
    spans_to_tags,
    tags_to_spans,
    validate_segment,
)
from .scoring import (
    AggregationWeights,
    DaScaler,
    InferenceResult,
    ScoreBundle,
    WordDistribution,
    aggregate,
    average_distributions,
    compose_inference,
    decode_tags,
    fit_da_scaler,
    scale_da,
)

__all__ = [
    "AggregationWeights",
    "DaScaler",
    "ErrorSpan",
    "InferenceResult",
    "ScoreBundle",
    "Segment",
    "Severity",
    "TokenTags",
    "WordDistribution",
    "aggregate",
    "average_distributions",
    "compose_inference",
    "decode_tags",
    "error_penalty",
    "fit_da_scaler",
    "mqm_score",
    "scale_da",
    "spans_to_tags",
    "tags_to_spans",
    "validate_segment",
    "__version__",
]
