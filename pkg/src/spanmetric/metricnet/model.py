"""Toy transformer encoder with a sentence regression head and a word tagger.

A deliberately small stand-in for the large pretrained backbones the full-
scale metric builds on: hashed-chunk embeddings, a couple of pre-norm
attention blocks, a learned softmax mix over layer outputs as the pooling
layer, a feed-forward sentence head (tanh activations, sigmoid output) read
from the CLS position, and a linear 4-way severity classifier over
translation positions. Everything runs in float64 on CPU so that gradient
checks and byte-reproducibility are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .vocab import Vocab

NUM_SEVERITIES = 4


@dataclass(frozen=True)
class EncoderConfig:
    model_dim: int = 32
    layers: int = 2
    heads: int = 2
    ffn_dim: int = 64
    max_len: int = 256
    layer_mix: bool = True
    vocab_buckets: int = 4096

    def __post_init__(self) -> None:
        if self.model_dim % self.heads != 0:
            raise ValueError(
                f"model_dim {self.model_dim} not divisible by {self.heads} heads"
            )


class SelfAttention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.out = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        b, n, d = x.shape
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        shape = (b, n, self.heads, self.head_dim)
        q = q.view(shape).transpose(1, 2)
        k = k.view(shape).transpose(1, 2)
        v = v.view(shape).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        # pad positions may not be attended to; every row can still see CLS
        scores = scores.masked_fill(pad_mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        mixed = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.out(mixed)


class EncoderLayer(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.norm1 = nn.LayerNorm(config.model_dim)
        self.attn = SelfAttention(config.model_dim, config.heads)
        self.norm2 = nn.LayerNorm(config.model_dim)
        self.ffn = nn.Sequential(
            nn.Linear(config.model_dim, config.ffn_dim),
            nn.GELU(),
            nn.Linear(config.ffn_dim, config.model_dim),
        )

    def forward(self, x: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.norm1(x), pad_mask)
        return x + self.ffn(self.norm2(x))


class QualityModel(nn.Module):
    """Two-headed encoder: sentence score from CLS, severity logits per token."""

    def __init__(self, config: EncoderConfig, vocab: Vocab | None = None):
        super().__init__()
        if vocab is None:
            vocab = Vocab(bucket_count=config.vocab_buckets)
        if vocab.bucket_count != config.vocab_buckets:
            raise ValueError("vocab bucket count disagrees with config")
        self.config = config
        d = config.model_dim
        self.embed = nn.Embedding(vocab.size, d)
        self.pos_embed = nn.Embedding(config.max_len, d)
        self.blocks = nn.ModuleList(EncoderLayer(config) for _ in range(config.layers))
        if config.layer_mix:
            self.mix_logits = nn.Parameter(torch.zeros(config.layers + 1))
        else:
            self.mix_logits = None
        self.sent_head = nn.Sequential(
            nn.Linear(d, d), nn.Tanh(), nn.Linear(d, 1)
        )
        self.word_head = nn.Linear(d, NUM_SEVERITIES)
        nn.init.normal_(self.embed.weight, std=0.1)
        nn.init.normal_(self.pos_embed.weight, std=0.02)
        self.double()

    def layer_mix_weights(self) -> torch.Tensor | None:
        if self.mix_logits is None:
            return None
        return torch.softmax(self.mix_logits, dim=0)

    def forward(
        self, ids: torch.Tensor, pad_mask: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Map padded id batches to (sentence scores, per-position severity logits).

        `ids` is (batch, length) int64; `pad_mask` is True at padding. Returns
        sentence scores in (0, 1) of shape (batch,) and logits of shape
        (batch, length, 4); callers slice out the translation positions.
        """
        if ids.shape[1] > self.config.max_len:
            raise ValueError(f"sequence length {ids.shape[1]} exceeds {self.config.max_len}")
        positions = torch.arange(ids.shape[1], device=ids.device)
        h = self.embed(ids) + self.pos_embed(positions)[None, :, :]
        states = [h]
        for block in self.blocks:
            h = block(h, pad_mask)
            states.append(h)
        if self.mix_logits is not None:
            mix = self.layer_mix_weights()
            h = sum(w * s for w, s in zip(mix, states))
        sentence = torch.sigmoid(self.sent_head(h[:, 0, :]).squeeze(-1))
        logits = self.word_head(h)
        return sentence, logits

    def encoder_parameter_groups(self) -> list[list[nn.Parameter]]:
        """Encoder parameters grouped top layer first, embeddings last.

        The ordering backs layerwise learning-rate decay: group i gets the
        encoder rate decayed i times.
        """
        groups = [list(block.parameters()) for block in reversed(self.blocks)]
        groups.append(list(self.embed.parameters()) + list(self.pos_embed.parameters()))
        return groups

    def head_parameters(self) -> list[nn.Parameter]:
        params = list(self.sent_head.parameters()) + list(self.word_head.parameters())
        if self.mix_logits is not None:
            params.append(self.mix_logits)
        return params

    def encoder_parameters(self) -> list[nn.Parameter]:
        return [p for group in self.encoder_parameter_groups() for p in group]
