"""Trainable toy quality metric: tokenizer, two-headed encoder, curriculum."""

from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    ALL_MODES,
    SupervisionError,
    TrainingExample,
    example_from_segment,
    examples_from_segments,
)
from .losses import batch_loss, example_loss, grad_check
from .model import EncoderConfig, QualityModel
from .runtime import (
    ModeUnsatisfiableError,
    PassOutputs,
    check_mode_satisfiable,
    predict_segments,
    required_passes,
)
from .training import (
    DEFAULT_CLASS_WEIGHTS,
    PhaseReport,
    PhaseSpec,
    TrainingDivergedError,
    default_phase_specs,
    run_curriculum,
    train_phase,
)
from .vocab import (
    AssembledInput,
    TokenizedText,
    Vocab,
    assemble_input,
    tokenize,
)

__all__ = [
    "ALL_MODES",
    "AssembledInput",
    "DEFAULT_CLASS_WEIGHTS",
    "EncoderConfig",
    "ModeUnsatisfiableError",
    "PassOutputs",
    "PhaseReport",
    "PhaseSpec",
    "QualityModel",
    "SupervisionError",
    "TokenizedText",
    "TrainingDivergedError",
    "TrainingExample",
    "Vocab",
    "assemble_input",
    "batch_loss",
    "check_mode_satisfiable",
    "default_phase_specs",
    "example_from_segment",
    "example_loss",
    "examples_from_segments",
    "grad_check",
    "load_checkpoint",
    "predict_segments",
    "required_passes",
    "run_curriculum",
    "save_checkpoint",
    "tokenize",
    "train_phase",
]
