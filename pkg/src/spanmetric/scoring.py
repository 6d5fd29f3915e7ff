"""Inference-time score composition and DA score scaling.

A quality model run in unified mode produces three forward passes (src, ref,
src+ref), each with a sentence score and a per-token severity distribution.
This module averages the distributions, decodes tags, builds error spans,
infers the span-based quality score, and blends everything into the final
sentence score via a weighted sum. Single-mode runs short-circuit to the one
regression score. Direct-assessment z-scores are mapped into [0, 1] with
min-max scaling fitted on unanimous-extreme annotations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .annotations import ErrorSpan, Severity, TokenTags, mqm_score, tags_to_spans

#: Evaluation modes. "unified" composes the three single-pass modes.
MODES = ("src", "ref", "src+ref")

#: Default blend of (src, ref, src+ref, mqm) scores for the unified mode.
DEFAULT_WEIGHTS = (1 / 9, 1 / 3, 1 / 3, 2 / 9)

_ROW_SUM_TOL = 1e-9


class WordDistribution:
    """Per-translation-token probability rows over the four severities."""

    def __init__(self, rows: Sequence[Sequence[float]] | np.ndarray):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 4:
            raise ValueError(f"expected an (n, 4) array, got shape {rows.shape}")
        if np.any(rows < 0):
            raise ValueError("probabilities must be nonnegative")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > _ROW_SUM_TOL):
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"row {worst} sums to {sums[worst]}, not 1")
        self.rows = rows

    def __len__(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class ScoreBundle:
    """The sentence-level scores feeding the final weighted sum.

    Single-mode inference leaves the unused regression slots as None; the
    span-inferred mqm score is always present.
    """

    mqm: float
    src: float | None = None
    ref: float | None = None
    src_ref: float | None = None

    def __post_init__(self) -> None:
        for name, value in (("mqm", self.mqm), ("src", self.src),
                            ("ref", self.ref), ("src_ref", self.src_ref)):
            if value is not None and not (0.0 <= value <= 1.0):
                raise ValueError(f"score {name}={value} is outside [0, 1]")

    def as_vector(self) -> tuple[float | None, float | None, float | None, float]:
        """Scores ordered (src, ref, src+ref, mqm) to match the blend weights."""
        return (self.src, self.ref, self.src_ref, self.mqm)


@dataclass(frozen=True)
class AggregationWeights:
    """Nonnegative blend weights for (src, ref, src+ref, mqm); must sum to 1."""

    src: float = DEFAULT_WEIGHTS[0]
    ref: float = DEFAULT_WEIGHTS[1]
    src_ref: float = DEFAULT_WEIGHTS[2]
    mqm: float = DEFAULT_WEIGHTS[3]

    def __post_init__(self) -> None:
        vec = self.as_vector()
        if any(w < 0 for w in vec):
            raise ValueError("aggregation weights must be nonnegative")
        if abs(sum(vec) - 1.0) > 1e-12:
            raise ValueError(f"aggregation weights sum to {sum(vec)}, not 1")

    def as_vector(self) -> tuple[float, float, float, float]:
        return (self.src, self.ref, self.src_ref, self.mqm)


@dataclass(frozen=True)
class DaScaler:
    """Practical min/max z-score bounds for direct-assessment scaling."""

    z_min: float
    z_max: float

    def __post_init__(self) -> None:
        if not self.z_min < self.z_max:
            raise ValueError(f"need z_min < z_max, got {self.z_min} >= {self.z_max}")


@dataclass(frozen=True)
class InferenceResult:
    """Everything one inference produces for a segment."""

    spans: tuple[ErrorSpan, ...]
    bundle: ScoreBundle
    score: float
    tags: TokenTags


def average_distributions(dists: Sequence[WordDistribution]) -> WordDistribution:
    """Elementwise arithmetic mean of severity distributions.

    All inputs must share the same token count; rows stay normalized.
    """
    if not dists:
        raise ValueError("need at least one distribution")
    n = len(dists[0])
    for d in dists[1:]:
        if len(d) != n:
            raise ValueError(f"token counts differ: {len(d)} vs {n}")
    mean = np.mean([d.rows for d in dists], axis=0)
    return WordDistribution(mean)


def decode_tags(
    dist: WordDistribution, offsets: Sequence[tuple[int, int]]
) -> TokenTags:
    """Argmax decode, breaking exact probability ties toward the less severe label."""
    if len(dist) != len(offsets):
        raise ValueError(f"{len(dist)} rows but {len(offsets)} token offsets")
    # argmax returns the first maximum; severity columns are ordered OK..CRIT,
    # so ties already resolve toward the less severe label.
    picks = np.argmax(dist.rows, axis=1)
    return TokenTags(tuple(Severity(int(p)) for p in picks), tuple(offsets))


def aggregate(bundle: ScoreBundle, weights: AggregationWeights | None = None) -> float:
    """Weighted sum of the four sentence-level scores.

    A missing bundle component is only tolerated under a zero weight.
    """
    weights = weights or AggregationWeights()
    total = 0.0
    for name, y, w in zip(
        ("src", "ref", "src_ref", "mqm"), bundle.as_vector(), weights.as_vector()
    ):
        if y is None:
            if w != 0.0:
                raise ValueError(f"bundle component {name} is missing but has weight {w}")
            continue
        total += w * y
    return total


def compose_inference(
    sentence_scores: Mapping[str, float],
    word_dists: Mapping[str, WordDistribution],
    offsets: Sequence[tuple[int, int]],
    mode: str = "unified",
    weights: AggregationWeights | None = None,
) -> InferenceResult:
    """Compose per-pass model outputs into the final segment prediction.

    In unified mode all three passes are required: their severity
    distributions are averaged, tags decoded, spans built, and the final
    score is the weighted blend of the three regression scores with the
    span-inferred score. In a single mode ("src", "ref", "src+ref") the final
    score is that pass's regression score and spans come from that pass alone.
    """
    if mode == "unified":
        required = MODES
    elif mode in MODES:
        required = (mode,)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    missing = [m for m in required if m not in sentence_scores or m not in word_dists]
    if missing:
        raise ValueError(f"mode {mode!r} needs passes {missing} which were not supplied")

    dist = average_distributions([word_dists[m] for m in required])
    tags = decode_tags(dist, offsets)
    spans = tuple(tags_to_spans(tags))
    y_mqm = mqm_score(spans)

    if mode == "unified":
        bundle = ScoreBundle(
            mqm=y_mqm,
            src=sentence_scores["src"],
            ref=sentence_scores["ref"],
            src_ref=sentence_scores["src+ref"],
        )
        score = aggregate(bundle, weights)
    else:
        bundle = ScoreBundle(
            mqm=y_mqm,
            src=sentence_scores[mode] if mode == "src" else None,
            ref=sentence_scores[mode] if mode == "ref" else None,
            src_ref=sentence_scores[mode] if mode == "src+ref" else None,
        )
        score = sentence_scores[mode]
    return InferenceResult(spans=spans, bundle=bundle, score=score, tags=tags)


def fit_da_scaler(annotations: Iterable[tuple[str, float, float]]) -> DaScaler:
    """Fit practical z-score bounds from raw direct-assessment annotations.

    `annotations` holds (segment id, raw score 0-100, z-score) rows. The
    minimum bound is the mean z over all annotations of multi-annotated
    segments that were unanimously given a raw 0; the maximum bound uses the
    unanimous raw 100 segments.
    """
    by_segment: dict[str, list[tuple[float, float]]] = {}
    for seg_id, raw, z in annotations:
        by_segment.setdefault(seg_id, []).append((raw, z))

    def pool(target_raw: float) -> list[float]:
        zs: list[float] = []
        for rows in by_segment.values():
            if len(rows) > 1 and all(raw == target_raw for raw, _ in rows):
                zs.extend(z for _, z in rows)
        return zs

    lo, hi = pool(0.0), pool(100.0)
    if not lo or not hi:
        raise ValueError(
            "no multi-annotated unanimous raw-0 and raw-100 segments found; "
            "supply z_min/z_max bounds manually"
        )
    return DaScaler(z_min=float(np.mean(lo)), z_max=float(np.mean(hi)))


def scale_da(z: float, scaler: DaScaler) -> float:
    """Min-max scale a z-score into [0, 1], clamping outside the fitted bounds."""
    scaled = (z - scaler.z_min) / (scaler.z_max - scaler.z_min)
    return min(1.0, max(0.0, scaled))
