"""JSONL file formats: segments, score records, predictions, and reports.

One UTF-8 JSON object per line. Segment records use the Segment field names
verbatim (snake_case); span objects are {start, end, severity, category?}
with severities "minor" | "major" | "critical" on disk. Unknown keys are
tolerated and surfaced as extras so callers can carry metadata like
language-pair labels. All writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

from .annotations import ErrorSpan, Segment, Severity

_SEGMENT_FIELDS = {
    "id", "source", "translation", "reference", "gold_spans", "gold_score",
    "system", "annotator",
}


class ParseError(ValueError):
    """A record failed to parse; carries the 1-based line number."""

    def __init__(self, path: str | Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def span_to_record(span: ErrorSpan) -> dict:
    record: dict[str, Any] = {
        "start": span.start, "end": span.end, "severity": span.severity.label,
    }
    if span.category is not None:
        record["category"] = span.category
    return record


def record_to_span(record: dict) -> ErrorSpan:
    return ErrorSpan(
        start=int(record["start"]),
        end=int(record["end"]),
        severity=Severity.from_label(record["severity"]),
        category=record.get("category"),
    )


def segment_to_record(seg: Segment, extras: dict | None = None) -> dict:
    record: dict[str, Any] = {"id": seg.id, "source": seg.source,
                              "translation": seg.translation}
    if seg.reference is not None:
        record["reference"] = seg.reference
    if seg.gold_spans is not None:
        record["gold_spans"] = [span_to_record(s) for s in seg.gold_spans]
    if seg.gold_score is not None:
        record["gold_score"] = seg.gold_score
    if seg.system is not None:
        record["system"] = seg.system
    if seg.annotator is not None:
        record["annotator"] = seg.annotator
    if extras:
        for key, value in extras.items():
            record.setdefault(key, value)
    return record


def record_to_segment(record: dict) -> tuple[Segment, dict]:
    """Parse one segment record; returns the segment and any unknown keys."""
    for required in ("id", "source", "translation"):
        if required not in record:
            raise ValueError(f"missing required key {required!r}")
    spans = None
    if record.get("gold_spans") is not None:
        spans = tuple(record_to_span(s) for s in record["gold_spans"])
    seg = Segment(
        id=str(record["id"]),
        source=str(record["source"]),
        translation=str(record["translation"]),
        reference=None if record.get("reference") is None else str(record["reference"]),
        gold_spans=spans,
        gold_score=None if record.get("gold_score") is None else float(record["gold_score"]),
        system=None if record.get("system") is None else str(record["system"]),
        annotator=None if record.get("annotator") is None else str(record["annotator"]),
    )
    extras = {k: v for k, v in record.items() if k not in _SEGMENT_FIELDS}
    return seg, extras


def read_records(path: str | Path) -> list[dict]:
    """Read raw JSONL records, reporting the offending line on failure."""
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(record, dict):
                raise ParseError(path, line_no, "record is not a JSON object")
            records.append(record)
    return records


def read_segment_records(path: str | Path) -> list[tuple[Segment, dict]]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record is not a JSON object")
                out.append(record_to_segment(record))
            except ParseError:
                raise
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(path, line_no, str(exc)) from None
    return out


def read_segments(path: str | Path) -> list[Segment]:
    return [seg for seg, _ in read_segment_records(path)]


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: str | Path, records: Iterable[dict]) -> None:
    lines = [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in records]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def write_segments(
    path: str | Path, segments: Sequence[Segment],
    extras: Sequence[dict] | None = None,
) -> None:
    records = [
        segment_to_record(seg, extras[i] if extras else None)
        for i, seg in enumerate(segments)
    ]
    write_jsonl(path, records)


def write_json(path: str | Path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2,
                                       ensure_ascii=False) + "\n")
