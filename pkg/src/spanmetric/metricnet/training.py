"""Three-phase curriculum training for the toy quality metric.

Phase I regresses sentence scores only; Phase II introduces word-level
supervision with the emphasis almost entirely on the tagging task
(lambda 0.983); Phase III rebalances toward sentence regression
(lambda 0.055) on the highest-quality annotations. Encoder parameters use a
separate learning rate with layerwise decay and stay frozen for a fraction of
the first epoch of each phase. Training is single-threaded and fully
deterministic under a fixed seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import torch

from .data import SupervisionError, TrainingExample
from .losses import batch_loss
from .model import EncoderConfig, QualityModel
from . import checkpoint as ckpt

#: Tuned class weights for (OK, MIN, MAJ, CRIT); smallest on OK, reflecting
#: how rare error tokens are relative to clean ones.
DEFAULT_CLASS_WEIGHTS = (0.08, 0.486, 0.505, 0.533)


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; training aborted."""


@dataclass(frozen=True)
class PhaseSpec:
    """Configuration for one curriculum phase."""

    name: str
    loss_lambda: float
    word_level_training: bool = True
    class_weights: tuple[float, float, float, float] = DEFAULT_CLASS_WEIGHTS
    learning_rate: float = 2e-3
    encoder_learning_rate: float = 1e-3
    layerwise_decay: float = 0.983
    frozen_fraction: float = 0.3
    epochs: int = 4
    batch_size: int = 32

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss_lambda <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.loss_lambda}")
        if any(a <= 0 for a in self.class_weights):
            raise ValueError("class weights must be positive")
        if not 0.0 <= self.frozen_fraction <= 1.0:
            raise ValueError("frozen fraction must be in [0, 1]")


def default_phase_specs(epochs: tuple[int, int, int] = (4, 6, 4)) -> tuple[PhaseSpec, ...]:
    """The stock curriculum: sentence-only, word-heavy 0.983, rebalanced 0.055."""
    return (
        PhaseSpec(name="phase1", loss_lambda=0.0, word_level_training=False,
                  epochs=epochs[0]),
        PhaseSpec(name="phase2", loss_lambda=0.983, epochs=epochs[1]),
        PhaseSpec(name="phase3", loss_lambda=0.055, epochs=epochs[2]),
    )


@dataclass
class PhaseReport:
    phase: str
    examples: int
    steps: int
    loss_curve: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"phase": self.phase, "examples": self.examples,
                "steps": self.steps, "loss_curve": self.loss_curve}


def _optimizer(model: QualityModel, phase: PhaseSpec) -> torch.optim.AdamW:
    groups = [{"params": model.head_parameters(), "lr": phase.learning_rate}]
    for depth, params in enumerate(model.encoder_parameter_groups()):
        groups.append({
            "params": params,
            "lr": phase.encoder_learning_rate * phase.layerwise_decay ** depth,
        })
    return torch.optim.AdamW(groups)


def train_phase(
    model: QualityModel,
    corpus: Sequence[TrainingExample],
    phase: PhaseSpec,
    seed: int = 0,
) -> PhaseReport:
    """Minibatch-train the model in place for one phase; returns the loss curve.

    The encoder is frozen for the first `frozen_fraction` of the first
    epoch's steps (heads and layer mix keep training). Deterministic given
    the seed: single-threaded, seeded shuffling, no stochastic layers.
    """
    if not corpus:
        raise SupervisionError(f"{phase.name}: empty corpus")
    if phase.word_level_training and any(ex.gold_tags is None for ex in corpus):
        raise SupervisionError(
            f"{phase.name}: word-level training requires span supervision "
            "on every example"
        )
    torch.set_num_threads(1)
    rng = random.Random(f"{seed}:{phase.name}:shuffle")
    optimizer = _optimizer(model, phase)
    base_lrs = [group["lr"] for group in optimizer.param_groups]

    steps_per_epoch = math.ceil(len(corpus) / phase.batch_size)
    total_steps = steps_per_epoch * phase.epochs
    frozen_steps = math.ceil(phase.frozen_fraction * steps_per_epoch)
    encoder_params = model.encoder_parameters()
    for p in encoder_params:
        p.requires_grad_(frozen_steps == 0)

    report = PhaseReport(phase=phase.name, examples=len(corpus), steps=0)
    order = list(range(len(corpus)))
    step = 0
    for _ in range(phase.epochs):
        rng.shuffle(order)
        epoch_losses = []
        for start in range(0, len(order), phase.batch_size):
            batch = [corpus[i] for i in order[start:start + phase.batch_size]]
            optimizer.zero_grad(set_to_none=True)
            loss, _ = batch_loss(
                model, batch, phase.loss_lambda, phase.class_weights,
                phase.word_level_training,
            )
            if not torch.isfinite(loss):
                raise TrainingDivergedError(
                    f"{phase.name}: non-finite loss at step {step}"
                )
            loss.backward()
            # linear warmup over the first 5% of steps, then cosine decay
            # to 5% of the base rate over the rest of the phase
            warmup = max(1, total_steps // 20)
            if step < warmup:
                scale = (step + 1) / warmup
            else:
                progress = (step - warmup) / max(total_steps - warmup - 1, 1)
                scale = 0.05 + 0.95 * 0.5 * (1.0 + math.cos(math.pi * progress))
            for group, base in zip(optimizer.param_groups, base_lrs):
                group["lr"] = base * scale
            optimizer.step()
            epoch_losses.append(loss.item())
            step += 1
            if step == frozen_steps:
                for p in encoder_params:
                    p.requires_grad_(True)
        report.loss_curve.append(sum(epoch_losses) / len(epoch_losses))
    report.steps = step
    for p in encoder_params:
        p.requires_grad_(True)
    return report


def run_curriculum(
    corpora: Sequence[Sequence[TrainingExample]],
    specs: Sequence[PhaseSpec] | None = None,
    config: EncoderConfig | None = None,
    seed: int = 0,
    checkpoint_dir: str | Path | None = None,
) -> tuple[QualityModel, list[PhaseReport]]:
    """Train a fresh model through the phases sequentially.

    Every phase needs a non-empty corpus, and word-level phases need span
    supervision throughout. A checkpoint is written after each phase when a
    directory is given; the final model is returned either way.
    """
    specs = tuple(specs) if specs is not None else default_phase_specs()
    if len(corpora) != len(specs):
        raise ValueError(f"{len(corpora)} corpora for {len(specs)} phase specs")
    for spec, corpus in zip(specs, corpora):
        if not corpus:
            raise SupervisionError(f"{spec.name}: empty corpus (phases cannot be skipped)")
        if spec.word_level_training and any(ex.gold_tags is None for ex in corpus):
            raise SupervisionError(f"{spec.name}: corpus lacks span supervision")

    config = config or EncoderConfig()
    torch.manual_seed(seed)
    model = QualityModel(config)
    reports = []
    for i, (spec, corpus) in enumerate(zip(specs, corpora)):
        reports.append(train_phase(model, corpus, spec, seed=seed + i))
        if checkpoint_dir is not None:
            path = Path(checkpoint_dir) / f"{spec.name}.ckpt"
            ckpt.save_checkpoint(path, model)
    return model, reports
