"""Hashed-chunk tokenization and unified input assembly for the toy metric.

The tokenizer splits whitespace-delimited words into character chunks of at
most 4 characters, each carrying its exact character range in the original
text. Token ids come from a stable hash into a fixed bucket space, so the
same string maps to the same id on every run and platform (no pretrained
subword vocabulary). Inputs for the model are assembled as

    [CLS] translation [SEP_T] [SEP_X] source [SEP_X] [SEP_X] reference [SEP_X]

with the source and/or reference parts present according to the evaluation
mode. Only translation positions receive word-level supervision and outputs.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

CLS_ID = 0
SEP_TRANSLATION = 1
SEP_CONTEXT = 2
NUM_RESERVED = 3

_WORD = re.compile(r"\S+")
_CHUNK_LEN = 4


@dataclass(frozen=True)
class Vocab:
    """Deterministic hashing vocabulary with reserved control ids."""

    bucket_count: int = 4096

    def token_id(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return NUM_RESERVED + int.from_bytes(digest, "little") % self.bucket_count

    @property
    def size(self) -> int:
        return NUM_RESERVED + self.bucket_count


@dataclass(frozen=True)
class TokenizedText:
    """Tokens with their character offsets and vocabulary ids."""

    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]
    ids: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str, vocab: Vocab) -> TokenizedText:
    """Split text into hashed character chunks of length <= 4 with exact offsets."""
    tokens: list[str] = []
    offsets: list[tuple[int, int]] = []
    for word in _WORD.finditer(text):
        start = word.start()
        chunk_text = word.group()
        for i in range(0, len(chunk_text), _CHUNK_LEN):
            chunk = chunk_text[i:i + _CHUNK_LEN]
            tokens.append(chunk)
            offsets.append((start + i, start + i + len(chunk)))
    ids = tuple(vocab.token_id(t) for t in tokens)
    return TokenizedText(tuple(tokens), tuple(offsets), ids)


@dataclass(frozen=True)
class AssembledInput:
    """A model-ready id sequence with the translation positions marked."""

    ids: tuple[int, ...]
    translation_start: int
    translation_count: int
    truncated: bool

    @property
    def translation_slice(self) -> slice:
        return slice(self.translation_start,
                     self.translation_start + self.translation_count)


def assemble_input(
    translation: TokenizedText,
    mode: str,
    source: TokenizedText | None = None,
    reference: TokenizedText | None = None,
    max_len: int = 256,
) -> AssembledInput:
    """Build the unified input id sequence for one forward pass.

    `mode` is one of "src", "ref", "src+ref". When the sequence would exceed
    `max_len`, the additional-input side is truncated first (rightmost part
    first, dropping a part's separators with it); the translation is never
    truncated and overflowing it raises.
    """
    wants_src = mode in ("src", "src+ref")
    wants_ref = mode in ("ref", "src+ref")
    if mode not in ("src", "ref", "src+ref"):
        raise ValueError(f"unknown mode {mode!r}")
    if wants_src and source is None:
        raise ValueError(f"mode {mode!r} requires a source")
    if wants_ref and reference is None:
        raise ValueError(f"mode {mode!r} requires a reference")

    core = 2 + len(translation)  # [CLS] translation [SEP_T]
    if core > max_len:
        raise ValueError(
            f"translation occupies {core} of {max_len} positions and is never truncated"
        )

    parts: list[list[int] | None] = []
    if wants_src:
        parts.append(list(source.ids))
    if wants_ref:
        parts.append(list(reference.ids))

    budget = max_len - core
    total = sum(len(p) + 2 for p in parts)
    truncated = False
    for i in range(len(parts) - 1, -1, -1):
        over = total - budget
        if over <= 0:
            break
        part = parts[i]
        if len(part) > over:
            parts[i] = part[:len(part) - over]
            total -= over
        else:
            total -= len(part) + 2
            parts[i] = None
        truncated = True

    ids = [CLS_ID, *translation.ids, SEP_TRANSLATION]
    for part in parts:
        if part is not None:
            ids.extend([SEP_CONTEXT, *part, SEP_CONTEXT])
    return AssembledInput(
        ids=tuple(ids),
        translation_start=1,
        translation_count=len(translation),
        truncated=truncated,
    )
