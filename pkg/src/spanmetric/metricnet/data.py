"""Supervision preparation: segments to trainable examples.

A training example pairs a segment's tokenized fields with its sentence-level
gold score and, when span annotations exist, per-token severity tags projected
from the gold character spans. The tags describe the translation, so they are
shared by every input mode.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..annotations import Segment, Severity, spans_to_tags
from .vocab import TokenizedText, Vocab, tokenize

ALL_MODES = ("src", "ref", "src+ref")


class SupervisionError(ValueError):
    """A corpus or example lacks the supervision a training phase needs."""


@dataclass(frozen=True)
class TrainingExample:
    segment: Segment
    translation: TokenizedText
    source: TokenizedText
    reference: TokenizedText | None
    gold_score: float
    gold_tags: tuple[Severity, ...] | None

    @property
    def modes(self) -> tuple[str, ...]:
        """Input modes this example supports (reference-less: src only)."""
        return ALL_MODES if self.reference is not None else ("src",)


def example_from_segment(seg: Segment, vocab: Vocab) -> TrainingExample:
    if seg.gold_score is None:
        raise SupervisionError(f"segment {seg.id!r} has no gold score")
    translation = tokenize(seg.translation, vocab)
    tags: tuple[Severity, ...] | None = None
    if seg.gold_spans is not None:
        tags = spans_to_tags(
            seg.gold_spans, translation.offsets, text_length=len(seg.translation)
        ).tags
    return TrainingExample(
        segment=seg,
        translation=translation,
        source=tokenize(seg.source, vocab),
        reference=tokenize(seg.reference, vocab) if seg.reference is not None else None,
        gold_score=float(seg.gold_score),
        gold_tags=tags,
    )


def examples_from_segments(
    segments: Sequence[Segment], vocab: Vocab
) -> list[TrainingExample]:
    return [example_from_segment(s, vocab) for s in segments]
