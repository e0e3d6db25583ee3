"""Numeric substrate: dense numpy arrays plus precision control.

Tensors are plain ``np.ndarray`` values of rank 1-3. Production code runs in
float32; gradient checking needs float64 because central finite differences
drown in float32 rounding noise. The active dtype is a module-level setting
that layer constructors consult, switchable with the :func:`precision`
context manager.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import ShapeMismatchError

_ACTIVE_DTYPE = np.float32


def active_dtype():
    return _ACTIVE_DTYPE


@contextmanager
def precision(dtype):
    """Temporarily switch the default tensor dtype (e.g. ``np.float64``)."""
    global _ACTIVE_DTYPE
    previous = _ACTIVE_DTYPE
    _ACTIVE_DTYPE = np.dtype(dtype).type
    try:
        yield
    finally:
        _ACTIVE_DTYPE = previous


def as_tensor(values, dtype=None, checked: bool = True) -> np.ndarray:
    """Coerce ``values`` to a contiguous rank 1-3 float array.

    In checked mode, non-finite entries are rejected at construction.
    """
    arr = np.ascontiguousarray(values, dtype=dtype or _ACTIVE_DTYPE)
    if arr.ndim == 0 or arr.ndim > 3:
        raise ShapeMismatchError(f"tensor rank must be 1..3, got {arr.ndim}")
    if checked and not np.all(np.isfinite(arr)):
        raise ShapeMismatchError("tensor contains NaN or Inf values")
    return arr


def require_shape(arr: np.ndarray, expected: tuple, what: str) -> None:
    if tuple(arr.shape) != tuple(expected):
        raise ShapeMismatchError(f"{what}: expected shape {tuple(expected)}, got {tuple(arr.shape)}")
