"""Domain types for severity-annotated translations and the span scoring algebra.

Severities follow the MQM convention: OK marks clean tokens, MIN/MAJ/CRIT mark
errors of increasing gravity with penalty multipliers 0/1/5/10. Error spans are
character-offset regions of the translation (offsets count Unicode scalar
values, never bytes). `error_penalty` and `mqm_score` turn a span list into the
standard capped quality score in [0, 1].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence


class Severity(enum.IntEnum):
    """Ordered error severity. The integer order backs "most severe" comparisons."""

    OK = 0
    MIN = 1
    MAJ = 2
    CRIT = 3

    @property
    def penalty(self) -> int:
        return _PENALTIES[self]

    @classmethod
    def from_label(cls, label: str) -> "Severity":
        """Parse an on-disk label ("minor" | "major" | "critical" | "ok")."""
        try:
            return _LABEL_TO_SEVERITY[label.lower()]
        except KeyError:
            raise ValueError(f"unknown severity label: {label!r}") from None

    @property
    def label(self) -> str:
        return _SEVERITY_TO_LABEL[self]


_PENALTIES = {Severity.OK: 0, Severity.MIN: 1, Severity.MAJ: 5, Severity.CRIT: 10}

_LABEL_TO_SEVERITY = {
    "ok": Severity.OK,
    "minor": Severity.MIN,
    "major": Severity.MAJ,
    "critical": Severity.CRIT,
}
_SEVERITY_TO_LABEL = {v: k for k, v in _LABEL_TO_SEVERITY.items()}

# Penalty budget above which the MQM score bottoms out at 0.
MQM_CAP = 25


@dataclass(frozen=True)
class ErrorSpan:
    """A character-offset error region of a translation.

    `start` is inclusive, `end` exclusive; a valid span never has severity OK.
    The dataclass itself is a permissive carrier so that invalid annotations
    read from disk can be reported by `validate_segment` instead of crashing
    the reader; operations state validity as a precondition. The category
    label is carried opaquely and never affects scoring.
    """

    start: int
    end: int
    severity: Severity
    category: str | None = None

    def violations(self, text_length: int, name: str = "span") -> list[str]:
        """Invariant violations of this span against a text of the given length."""
        found = []
        if self.severity == Severity.OK:
            found.append(f"{name} has severity OK")
        if not (0 <= self.start < self.end <= text_length):
            found.append(
                f"{name} [{self.start}, {self.end}) is out of bounds for "
                f"text of length {text_length}"
            )
        return found

    def overlaps(self, start: int, end: int) -> bool:
        """True if this span intersects the half-open range [start, end)."""
        return self.start < end and start < self.end


@dataclass(frozen=True)
class TokenTags:
    """Per-token severity tags aligned with per-token character offsets."""

    tags: tuple[Severity, ...]
    offsets: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "offsets", tuple(tuple(o) for o in self.offsets))
        if len(self.tags) != len(self.offsets):
            raise ValueError(
                f"{len(self.tags)} tags but {len(self.offsets)} offsets"
            )
        prev_end = -1
        for s, e in self.offsets:
            if not (0 <= s < e):
                raise ValueError(f"bad token offsets ({s}, {e})")
            if s < prev_end:
                raise ValueError("token offsets overlap or are out of order")
            prev_end = e

    def __len__(self) -> int:
        return len(self.tags)


@dataclass(frozen=True)
class Segment:
    """One evaluation unit: a translation in the context it is judged against."""

    id: str
    source: str
    translation: str
    reference: str | None = None
    gold_spans: tuple[ErrorSpan, ...] | None = None
    gold_score: float | None = None
    system: str | None = None
    annotator: str | None = None

    def __post_init__(self) -> None:
        if self.gold_spans is not None:
            object.__setattr__(self, "gold_spans", tuple(self.gold_spans))


def tags_to_spans(tags: TokenTags) -> list[ErrorSpan]:
    """Group maximal runs of consecutive non-OK tokens into error spans.

    Each span covers the characters from the first token's start to the last
    token's end and takes the most severe tag found within the run. Output is
    sorted by start and no two spans come from touching token runs.
    """
    spans: list[ErrorSpan] = []
    run_start: int | None = None
    run_sev = Severity.OK
    for i, tag in enumerate(tags.tags):
        if tag != Severity.OK:
            if run_start is None:
                run_start = i
                run_sev = tag
            else:
                run_sev = max(run_sev, tag)
        elif run_start is not None:
            spans.append(
                ErrorSpan(tags.offsets[run_start][0], tags.offsets[i - 1][1], run_sev)
            )
            run_start = None
    if run_start is not None:
        spans.append(
            ErrorSpan(tags.offsets[run_start][0], tags.offsets[-1][1], run_sev)
        )
    return spans


def spans_to_tags(
    spans: Sequence[ErrorSpan],
    offsets: Sequence[tuple[int, int]],
    text_length: int | None = None,
) -> TokenTags:
    """Project character spans onto a tokenization.

    Each token receives the maximum severity among spans overlapping its
    character range (partial overlap counts), OK if none. When `text_length`
    is given, spans are validated against it (the last token may end before
    the text does, e.g. with trailing whitespace).
    """
    for span in spans:
        if span.severity == Severity.OK or span.start < 0 or span.start >= span.end:
            raise ValueError(f"invalid span [{span.start}, {span.end}) {span.severity.name}")
        if text_length is not None and span.end > text_length:
            raise ValueError(
                f"span [{span.start}, {span.end}) is out of bounds for "
                f"text of length {text_length}"
            )
    tags = []
    for s, e in offsets:
        sev = Severity.OK
        for span in spans:
            if span.overlaps(s, e):
                sev = max(sev, span.severity)
        tags.append(sev)
    return TokenTags(tuple(tags), tuple(tuple(o) for o in offsets))


def error_penalty(spans: Sequence[ErrorSpan]) -> int:
    """Total severity penalty: 1 per MIN, 5 per MAJ, 10 per CRIT."""
    return sum(span.severity.penalty for span in spans)


def mqm_score(spans: Sequence[ErrorSpan]) -> float:
    """Quality score in [0, 1] inferred from error spans.

    The penalty total is capped: (25 - e) / 25 while e < 25, else 0. A score
    of 1 corresponds to a perfect translation.
    """
    e = error_penalty(spans)
    if e < MQM_CAP:
        return (MQM_CAP - e) / MQM_CAP
    return 0.0


def validate_segment(seg: Segment) -> list[str]:
    """Collect every invariant violation of a segment; empty list means valid."""
    violations: list[str] = []
    n = len(seg.translation)
    if seg.gold_spans is not None:
        for i, span in enumerate(seg.gold_spans):
            violations.extend(span.violations(n, name=f"gold span {i}"))
    if seg.gold_score is not None and not (0.0 <= seg.gold_score <= 1.0):
        violations.append(f"gold score {seg.gold_score} is outside [0, 1]")
    return violations
