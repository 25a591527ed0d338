"""Checkpoint container.

Layout: ``b"DPE1"``, a little-endian uint32 with the JSON metadata length, the
UTF-8 JSON metadata (which lists tensor names and shapes), then every tensor
as little-endian float64 in declaration order.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .layers import Params

MAGIC = b"DPE1"


class CheckpointError(ValueError):
    pass


def save(path, params: Params, metadata: dict) -> None:
    meta = dict(metadata)
    meta["tensors"] = [[name, list(p.data.shape)] for name, p in params.items()]
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for p in params.values():
            f.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load(path) -> tuple:
    """Returns (Params, metadata)."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise CheckpointError("not a DPE1 checkpoint")
    (n,) = struct.unpack("<I", raw[4:8])
    meta = json.loads(raw[8:8 + n].decode("utf-8"))
    off = 8 + n
    params = Params()
    for name, shape in meta["tensors"]:
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=size, offset=off).reshape(shape).astype(np.float64)
        off += 8 * size
        params.add(name, arr)
    if off != len(raw):
        raise CheckpointError("trailing bytes in checkpoint")
    return params, meta
