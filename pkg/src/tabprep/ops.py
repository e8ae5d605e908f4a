"""Stateless per-value transforms applied between decoding and vocabulary lookup.

Dense path: clamp negatives to zero, then log(x + 1) evaluated in float64 and
rounded once to float32.  Sparse path: residue modulo the configured table
size.  All functions accept scalars or numpy arrays; array inputs are never
modified in place.
"""

from __future__ import annotations

import numpy as np

N_DENSE = 13
N_SPARSE = 26


def negatives_to_zero(values):
    """Clamp negative dense readings to 0; non-negatives pass through."""
    arr = np.asarray(values, dtype=np.int64)
    out = np.where(arr < 0, 0, arr)
    if np.isscalar(values) or getattr(values, "ndim", 1) == 0:
        return int(out)
    return out


def log_transform(values):
    """log(x + 1) computed in float64, rounded once to float32.

    Inputs must be non-negative; run negatives_to_zero first.
    """
    arr = np.asarray(values, dtype=np.float64)
    out = np.log1p(arr).astype(np.float32)
    if np.isscalar(values) or getattr(values, "ndim", 1) == 0:
        return np.float32(out)
    return out


def dense_transform(values, apply_log: bool = True):
    """Full dense feature map: clamp negatives, then log or plain float32.

    With apply_log the clamped value goes through log_transform; without it
    the clamped integer is converted to float32 directly.
    """
    clamped = negatives_to_zero(values)
    if apply_log:
        return log_transform(clamped)
    out = np.asarray(clamped, dtype=np.int64).astype(np.float32)
    if np.isscalar(values) or getattr(values, "ndim", 1) == 0:
        return np.float32(out)
    return out


def modulus_reduce(values, modulus: int):
    """Non-negative residue of each hash value modulo the vocabulary domain size."""
    if modulus < 1:
        raise ValueError("modulus must be >= 1")
    arr = np.asarray(values, dtype=np.uint64)
    out = (arr % np.uint64(modulus)).astype(np.uint32)
    if np.isscalar(values) or getattr(values, "ndim", 1) == 0:
        return int(out)
    return out
