"""Deterministic model checkpoint container.

Layout (documented contract, version PFCK1):

    b"PFCK1\\n"
    one JSON header line (sorted keys) ending in "\\n"; its "arrays" entry
    lists {"name", "shape"} in file order
    raw little-endian float64 buffers, C order, concatenated in that order

The format contains no timestamps, so identical inputs produce identical
bytes (CLI idempotence relies on this).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

MAGIC = b"PFCK1\n"


def save(path, header: dict, arrays: dict):
    path = Path(path)
    meta = dict(header)
    meta["arrays"] = [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()]
    blob = bytearray(MAGIC)
    blob += json.dumps(meta, sort_keys=True).encode() + b"\n"
    for v in arrays.values():
        blob += np.ascontiguousarray(v, dtype="<f8").tobytes()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(bytes(blob))


def load(path):
    path = Path(path)
    data = path.read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    head_end = data.index(b"\n", len(MAGIC))
    header = json.loads(data[len(MAGIC):head_end].decode())
    arrays = {}
    offset = head_end + 1
    for spec in header.pop("arrays"):
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        raw = data[offset:offset + 8 * count]
        if len(raw) != 8 * count:
            raise ValueError(f"{path}: truncated array {spec['name']}")
        arrays[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        offset += 8 * count
    return header, arrays
