"""Versioned checkpoint container: JSON header plus raw float64 tensors.

Layout: 4-byte magic, format version byte, 4-byte little-endian header
length, UTF-8 JSON header (encoder config and a tensor index in sorted name
order), then the tensors' raw little-endian bytes back to back. Writing the
same model twice produces identical bytes; loading against a mismatched
expected config is an error.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
from pathlib import Path

import numpy as np
import torch

from .model import EncoderConfig, QualityModel

MAGIC = b"SPMC"
FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, model: QualityModel) -> None:
    path = Path(path)
    state = model.state_dict()
    names = sorted(state)
    header = {
        "format_version": FORMAT_VERSION,
        "config": dataclasses.asdict(model.config),
        "tensors": [
            {"name": n, "shape": list(state[n].shape), "dtype": "<f8"}
            for n in names
        ],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(MAGIC)
            f.write(bytes([FORMAT_VERSION]))
            f.write(len(header_bytes).to_bytes(4, "little"))
            f.write(header_bytes)
            for n in names:
                f.write(state[n].numpy().astype("<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(
    path: str | Path, expected_config: EncoderConfig | None = None
) -> QualityModel:
    """Rebuild a model from a checkpoint file.

    When `expected_config` is given it must equal the stored config exactly.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    version = blob[4]
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    header_len = int.from_bytes(blob[5:9], "little")
    header = json.loads(blob[9:9 + header_len].decode("utf-8"))
    config = EncoderConfig(**header["config"])
    if expected_config is not None and expected_config != config:
        raise ValueError(
            f"checkpoint config {config} does not match expected {expected_config}"
        )
    model = QualityModel(config)
    offset = 9 + header_len
    state = {}
    for entry in header["tensors"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        nbytes = count * 8
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        state[entry["name"]] = torch.from_numpy(
            arr.copy().reshape(entry["shape"])
        )
        offset += nbytes
    if offset != len(blob):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    missing = set(model.state_dict()) - set(state)
    extra = set(state) - set(model.state_dict())
    if missing or extra:
        raise ValueError(f"checkpoint tensors mismatch: missing {missing}, extra {extra}")
    model.load_state_dict(state)
    return model
