"""Binary container shared by generator and tagger checkpoints.

Layout: 4 magic bytes, u32 version, u32 header length, UTF-8 JSON header
(which carries a ``tensors`` manifest of names and shapes), then each tensor
as raw little-endian float32 in manifest order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np
import torch

from .errors import CheckpointError

VERSION = 1


def write_container(path: str | Path, magic: bytes, header: Mapping,
                    tensors: Mapping[str, torch.Tensor]) -> None:
    assert len(magic) == 4
    manifest = [{"name": name, "shape": list(t.shape)} for name, t in tensors.items()]
    head = json.dumps({**header, "tensors": manifest}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", VERSION, len(head)))
        fh.write(head)
        for t in tensors.values():
            fh.write(t.detach().cpu().numpy().astype("<f4").tobytes())


def read_container(path: str | Path, magic: bytes) -> tuple[dict, dict[str, torch.Tensor]]:
    data = Path(path).read_bytes()
    if data[:4] != magic:
        raise CheckpointError(f"{path}: bad magic {data[:4]!r}, expected {magic!r}")
    if len(data) < 12:
        raise CheckpointError(f"{path}: truncated header")
    version, head_len = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    if len(data) < 12 + head_len:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(data[12:12 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from None
    offset = 12 + head_len
    tensors = {}
    for entry in header.pop("tensors"):
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 4 * count
        if end > len(data):
            raise CheckpointError(f"{path}: truncated tensor data at {entry['name']}")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(shape)
        tensors[entry["name"]] = torch.from_numpy(arr.astype(np.float32))
        offset = end
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return header, tensors
