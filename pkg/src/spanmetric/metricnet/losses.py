"""The multi-task training objective and its finite-difference gradient oracle.

Per input mode the loss combines a squared sentence-score error with a
class-weighted token cross-entropy:

    L_mode = (1 - lambda) * (y - y_hat)^2  +  lambda * (-1/n) sum_i a[y_i] log p_i[y_i]

and the total objective sums L_mode over the modes available for the example.
With word-level training disabled the sentence term alone is summed. All
tensors are float64; `grad_check` verifies autograd against central finite
differences on randomly sampled parameter coordinates.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
import torch

from ..annotations import Severity
from .data import ALL_MODES, SupervisionError, TrainingExample
from .model import QualityModel
from .vocab import assemble_input


def _collate(
    examples: Sequence[TrainingExample], mode: str, max_len: int
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Pad one mode's assembled inputs into (ids, pad_mask, translation_mask)."""
    assembled = [
        assemble_input(ex.translation, mode, ex.source, ex.reference, max_len)
        for ex in examples
    ]
    length = max(len(a.ids) for a in assembled)
    max_t = max(a.translation_count for a in assembled)
    ids = torch.zeros(len(examples), length, dtype=torch.long)
    pad = torch.ones(len(examples), length, dtype=torch.bool)
    tmask = torch.zeros(len(examples), max(max_t, 1), dtype=torch.bool)
    for i, a in enumerate(assembled):
        ids[i, :len(a.ids)] = torch.tensor(a.ids, dtype=torch.long)
        pad[i, :len(a.ids)] = False
        tmask[i, :a.translation_count] = True
    return ids, pad, tmask


def _word_term(
    logits: torch.Tensor,
    tags: torch.Tensor,
    tmask: torch.Tensor,
    alpha: torch.Tensor,
) -> torch.Tensor:
    """Per-example class-weighted cross-entropy, averaged over real tokens."""
    logp = torch.log_softmax(logits, dim=-1)
    picked = logp.gather(-1, tags.unsqueeze(-1)).squeeze(-1)
    weighted = alpha[tags] * picked * tmask
    n = tmask.sum(dim=-1).clamp(min=1)
    return -weighted.sum(dim=-1) / n


def batch_loss(
    model: QualityModel,
    examples: Sequence[TrainingExample],
    loss_lambda: float,
    class_weights: Sequence[float],
    word_level: bool,
) -> tuple[torch.Tensor, dict[str, dict[str, float]]]:
    """Mean objective over a batch, plus a per-mode term breakdown.

    Examples without a reference contribute only their src mode. Word-level
    training requires token tags on every example.
    """
    if not examples:
        raise ValueError("empty batch")
    if word_level:
        missing = [ex.segment.id for ex in examples if ex.gold_tags is None]
        if missing:
            raise SupervisionError(
                f"word-level training needs token tags; missing for {missing[:5]}"
            )
    alpha = torch.tensor(list(class_weights), dtype=torch.float64)
    gold_scores = torch.tensor([ex.gold_score for ex in examples], dtype=torch.float64)

    total = torch.zeros(len(examples), dtype=torch.float64)
    breakdown: dict[str, dict[str, float]] = {}
    for mode in ALL_MODES:
        idx = [i for i, ex in enumerate(examples) if mode in ex.modes]
        if not idx:
            continue
        subset = [examples[i] for i in idx]
        ids, pad, tmask = _collate(subset, mode, model.config.max_len)
        sent, logits = model(ids, pad)
        sl = (gold_scores[idx] - sent) ** 2
        if word_level:
            max_t = tmask.shape[1]
            tags = torch.zeros(len(subset), max_t, dtype=torch.long)
            for k, ex in enumerate(subset):
                if ex.gold_tags:
                    tags[k, :len(ex.gold_tags)] = torch.tensor(
                        [int(t) for t in ex.gold_tags], dtype=torch.long
                    )
            tlogits = logits[:, 1:1 + max_t, :]
            wl = _word_term(tlogits, tags, tmask, alpha)
            per_example = (1.0 - loss_lambda) * sl + loss_lambda * wl
            breakdown[mode] = {
                "sentence": float(sl.detach().mean()),
                "word": float(wl.detach().mean()),
            }
        else:
            per_example = sl
            breakdown[mode] = {"sentence": float(sl.detach().mean())}
        total.index_add_(0, torch.tensor(idx, dtype=torch.long), per_example)
    return total.mean(), breakdown


def example_loss(
    outputs: Mapping[str, tuple[torch.Tensor, torch.Tensor]],
    example: TrainingExample,
    loss_lambda: float,
    class_weights: Sequence[float],
    word_level: bool = True,
) -> tuple[torch.Tensor, dict[str, dict[str, float]]]:
    """Objective for a single example given raw per-mode head outputs.

    `outputs` maps each available mode to (sentence score scalar, logits of
    shape (n, 4) over the translation tokens).
    """
    missing = [m for m in example.modes if m not in outputs]
    if missing:
        raise ValueError(f"outputs missing for modes {missing}")
    if word_level and example.gold_tags is None:
        raise SupervisionError("word-level loss requested without token tags")
    alpha = torch.tensor(list(class_weights), dtype=torch.float64)
    total = torch.zeros((), dtype=torch.float64)
    breakdown: dict[str, dict[str, float]] = {}
    for mode in example.modes:
        sent, logits = outputs[mode]
        sl = (example.gold_score - sent) ** 2
        if word_level:
            tags = torch.tensor([int(t) for t in example.gold_tags], dtype=torch.long)
            n = max(len(tags), 1)
            logp = torch.log_softmax(logits, dim=-1)
            wl = -(alpha[tags] * logp.gather(-1, tags.unsqueeze(-1)).squeeze(-1)).sum() / n
            total = total + (1.0 - loss_lambda) * sl + loss_lambda * wl
            breakdown[mode] = {"sentence": float(sl.detach()), "word": float(wl.detach())}
        else:
            total = total + sl
            breakdown[mode] = {"sentence": float(sl.detach())}
    return total, breakdown


def grad_check(
    model: QualityModel,
    examples: Sequence[TrainingExample],
    loss_lambda: float = 0.5,
    class_weights: Sequence[float] = (0.08, 0.486, 0.505, 0.533),
    word_level: bool = True,
    epsilon: float = 1e-6,
    samples: int = 64,
    seed: int = 0,
) -> float:
    """Max relative error between autograd and central finite differences.

    Samples at least `samples` parameter coordinates (all of them if the
    model is smaller than that) and perturbs each by +-epsilon. Relative
    error uses a 1e-6 floor so exactly-zero gradients compare cleanly.
    """
    params = [p for p in model.parameters() if p.requires_grad]
    model.zero_grad()
    loss, _ = batch_loss(model, examples, loss_lambda, class_weights, word_level)
    loss.backward()

    sizes = [p.numel() for p in params]
    total_dims = sum(sizes)
    rng = np.random.default_rng(seed)
    coords = rng.choice(total_dims, size=min(samples, total_dims), replace=False)

    bounds = np.cumsum([0] + sizes)
    worst = 0.0
    with torch.no_grad():
        for coord in sorted(int(c) for c in coords):
            pi = int(np.searchsorted(bounds, coord, side="right") - 1)
            offset = coord - int(bounds[pi])
            flat = params[pi].data.view(-1)
            original = float(flat[offset])

            flat[offset] = original + epsilon
            up = float(batch_loss(model, examples, loss_lambda, class_weights, word_level)[0])
            flat[offset] = original - epsilon
            down = float(batch_loss(model, examples, loss_lambda, class_weights, word_level)[0])
            flat[offset] = original

            fd = (up - down) / (2.0 * epsilon)
            an = float(params[pi].grad.view(-1)[offset])
            rel = abs(fd - an) / max(abs(fd), abs(an), 1e-6)
            worst = max(worst, rel)
    return worst
