"""Batched inference: segments in, per-pass scores and severity distributions out.

Bridges the trained model and the scoring composition: for each segment the
required forward passes are run (all three in unified mode), producing the
sentence scores and per-token severity distributions that
`scoring.compose_inference` turns into spans and a final score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from ..annotations import Segment
from ..scoring import MODES, WordDistribution
from .model import QualityModel
from .vocab import Vocab, assemble_input, tokenize


class ModeUnsatisfiableError(ValueError):
    """A segment lacks the fields the requested evaluation mode needs."""


@dataclass(frozen=True)
class PassOutputs:
    """Raw per-pass model outputs for one segment."""

    sentence_scores: dict[str, float]
    word_dists: dict[str, WordDistribution]
    offsets: tuple[tuple[int, int], ...]


def required_passes(mode: str) -> tuple[str, ...]:
    if mode == "unified":
        return MODES
    if mode in MODES:
        return (mode,)
    raise ValueError(f"unknown mode {mode!r}")


def check_mode_satisfiable(segments: Sequence[Segment], mode: str) -> None:
    """Raise naming the offending segments if the mode needs missing fields."""
    passes = required_passes(mode)
    if any(p in ("ref", "src+ref") for p in passes):
        missing = [s.id for s in segments if s.reference is None]
        if missing:
            raise ModeUnsatisfiableError(
                f"mode {mode!r} requires a reference; missing for segments "
                f"{missing[:10]}" + ("..." if len(missing) > 10 else "")
            )


def predict_segments(
    model: QualityModel,
    vocab: Vocab,
    segments: Sequence[Segment],
    mode: str = "unified",
    batch_size: int = 64,
) -> list[PassOutputs]:
    """Run every required forward pass over the segments, batched.

    Deterministic: same model, same inputs, same outputs, independent of the
    batch size (padding positions are fully masked out).
    """
    check_mode_satisfiable(segments, mode)
    passes = required_passes(mode)
    model.eval()

    tokenized = [
        (tokenize(s.translation, vocab), tokenize(s.source, vocab),
         tokenize(s.reference, vocab) if s.reference is not None else None)
        for s in segments
    ]
    results = [
        PassOutputs(sentence_scores={}, word_dists={}, offsets=t[0].offsets)
        for t in tokenized
    ]
    max_len = model.config.max_len
    with torch.no_grad():
        for pass_mode in passes:
            for start in range(0, len(segments), batch_size):
                chunk = tokenized[start:start + batch_size]
                assembled = [
                    assemble_input(tr, pass_mode, src, ref, max_len)
                    for tr, src, ref in chunk
                ]
                length = max(len(a.ids) for a in assembled)
                ids = torch.zeros(len(chunk), length, dtype=torch.long)
                pad = torch.ones(len(chunk), length, dtype=torch.bool)
                for i, a in enumerate(assembled):
                    ids[i, :len(a.ids)] = torch.tensor(a.ids, dtype=torch.long)
                    pad[i, :len(a.ids)] = False
                sent, logits = model(ids, pad)
                probs = torch.softmax(logits, dim=-1).numpy()
                for i, a in enumerate(assembled):
                    rows = probs[i, a.translation_slice, :]
                    out = results[start + i]
                    out.sentence_scores[pass_mode] = float(sent[i])
                    out.word_dists[pass_mode] = WordDistribution(
                        np.asarray(rows, dtype=float)
                    )
    return results
