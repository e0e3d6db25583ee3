"""Binary dataset cache (FSDS) plus a JSON metadata sidecar.

Layout, all integers little-endian:

    bytes 0..3   magic "FSDS"
    byte  4      format version (1)
    8 bytes      row count   (uint64)
    8 bytes      column count (uint64)
    per column   uint16 name length, then that many UTF-8 bytes
    rows*cols    float32 feature values, row-major
    rows         uint16 class indices

The sidecar ``<cache>.meta.json`` records what the binary layout cannot:
classification mode, class names, label histogram, and ingest provenance.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CorruptCacheError

MAGIC = b"FSDS"
VERSION = 1


def meta_path(cache_path) -> Path:
    return Path(str(cache_path) + ".meta.json")


def write_cache(path, X, y, feature_names, meta: dict | None = None) -> None:
    X = np.ascontiguousarray(X, dtype=np.float32)
    y = np.ascontiguousarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be [rows, cols] and y must match its row count")
    if X.shape[1] != len(feature_names):
        raise ValueError("feature name count must equal column count")
    if y.size and (y.min() < 0 or y.max() > 0xFFFF):
        raise ValueError("class indices must fit in uint16")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        fh.write(struct.pack("<QQ", X.shape[0], X.shape[1]))
        for name in feature_names:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(X.astype("<f4", copy=False).tobytes())
        fh.write(y.astype("<u2").tobytes())
    if meta is not None:
        meta_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")


def read_cache(path):
    """Returns (X float32 [rows, cols], y int64 [rows], feature_names, meta|None)."""
    try:
        blob = Path(path).read_bytes()
    except FileNotFoundError:
        raise
    view = memoryview(blob)
    if len(blob) < 21 or bytes(view[:4]) != MAGIC:
        raise CorruptCacheError(f"{path}: bad magic")
    if view[4] != VERSION:
        raise CorruptCacheError(f"{path}: unsupported version {view[4]}")
    rows, cols = struct.unpack_from("<QQ", blob, 5)
    offset = 21
    names = []
    try:
        for _ in range(cols):
            (length,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            names.append(bytes(view[offset:offset + length]).decode("utf-8"))
            offset += length
    except struct.error as exc:
        raise CorruptCacheError(f"{path}: truncated header") from exc
    expected = offset + rows * cols * 4 + rows * 2
    if len(blob) != expected:
        raise CorruptCacheError(f"{path}: expected {expected} bytes, found {len(blob)}")
    X = np.frombuffer(view, dtype="<f4", count=rows * cols, offset=offset).reshape(rows, cols)
    offset += rows * cols * 4
    y = np.frombuffer(view, dtype="<u2", count=rows, offset=offset).astype(np.int64)
    meta = None
    mp = meta_path(path)
    if mp.exists():
        meta = json.loads(mp.read_text(encoding="utf-8"))
    return X.copy(), y, names, meta
