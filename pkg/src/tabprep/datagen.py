"""Seeded synthetic dataset generation.

Produces tab-separated text in the fixed 40-column layout together with the
ground-truth decoded arrays, so generated files double as decoder oracles.
Dense fields are signed decimals, sparse fields lowercase hex; a missing
field renders as an empty string and decodes to 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .errors import ConfigError
from .schema import N_DENSE, N_SPARSE, RecordBatch

# worst case: label 1 + 13*(1+10) + 26*(1+8) + newline, rounded up
_MAX_ROW_BYTES = 400


@dataclass(frozen=True)
class SyntheticSpec:
    """Knobs for one generated dataset.

    hex_width 0 renders sparse values at natural width; 1..8 zero-pads to a
    fixed width (wider values are drawn to fit).  missing_prob applies per
    field, independently, to dense and sparse columns.
    """

    n_rows: int
    seed: int = 0
    missing_prob: float = 0.04
    hex_width: int = 0
    dense_low: int = -100
    dense_high: int = 1_000_000

    def __post_init__(self):
        if self.n_rows < 0:
            raise ConfigError("n_rows", "must be >= 0")
        if not 0 <= self.missing_prob <= 1:
            raise ConfigError("missing_prob", "must be in [0, 1]")
        if not 0 <= self.hex_width <= 8:
            raise ConfigError("hex_width", "must be 0..8")
        if not -(2**31) < self.dense_low <= self.dense_high < 2**31:
            raise ConfigError("dense_low", "bounds must satisfy low <= high within signed 32 bits")


@njit(cache=True, nogil=True)
def _put_uint(out, pos, v):
    if v == 0:
        out[pos] = 0x30
        return pos + 1
    start = pos
    while v > 0:
        out[pos] = 0x30 + v % 10
        v //= 10
        pos += 1
    lo, hi = start, pos - 1
    while lo < hi:
        out[lo], out[hi] = out[hi], out[lo]
        lo += 1
        hi -= 1
    return pos


@njit(cache=True, nogil=True)
def _put_hex(out, pos, v, width):
    ndig = width
    if ndig == 0:
        ndig = 1
        t = v >> 4
        while t > 0:
            ndig += 1
            t >>= 4
    for k in range(ndig - 1, -1, -1):
        nib = (v >> (4 * k)) & 0xF
        out[pos] = 0x30 + nib if nib < 10 else 0x61 + nib - 10
        pos += 1
    return pos


@njit(cache=True, nogil=True)
def _render(labels, dense, dense_missing, sparse, sparse_missing, hex_width, out):
    pos = 0
    for i in range(labels.shape[0]):
        pos = _put_uint(out, pos, labels[i])
        for j in range(dense.shape[1]):
            out[pos] = 0x09
            pos += 1
            if dense_missing[i, j] == 0:
                v = dense[i, j]
                if v < 0:
                    out[pos] = 0x2D
                    pos += 1
                    v = -v
                pos = _put_uint(out, pos, v)
        for j in range(sparse.shape[1]):
            out[pos] = 0x09
            pos += 1
            if sparse_missing[i, j] == 0:
                pos = _put_hex(out, pos, sparse[i, j], hex_width)
        out[pos] = 0x0A
        pos += 1
    return pos


def generate(spec: SyntheticSpec) -> tuple[bytes, RecordBatch]:
    """Return (text, truth): the encoded file and what decoding it must yield."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rows
    labels = rng.integers(0, 2, size=n, dtype=np.int64)
    dense = rng.integers(spec.dense_low, spec.dense_high + 1, size=(n, N_DENSE), dtype=np.int64)
    sparse_high = 16 ** spec.hex_width if spec.hex_width else 2**32
    sparse = rng.integers(0, sparse_high, size=(n, N_SPARSE), dtype=np.int64)
    dense_missing = (rng.random((n, N_DENSE)) < spec.missing_prob).astype(np.uint8)
    sparse_missing = (rng.random((n, N_SPARSE)) < spec.missing_prob).astype(np.uint8)

    out = np.empty(n * _MAX_ROW_BYTES, dtype=np.uint8)
    length = _render(labels, dense, dense_missing, sparse, sparse_missing,
                     spec.hex_width, out)
    text = out[:length].tobytes()

    # a missing field decodes to 0, so the truth carries 0 there
    truth = RecordBatch(
        labels=labels.astype(np.int32),
        dense=np.where(dense_missing == 1, 0, dense).astype(np.int32),
        sparse=np.where(sparse_missing == 1, 0, sparse).astype(np.uint32),
    )
    return text, truth


def write_text(path: str | Path, spec: SyntheticSpec) -> RecordBatch:
    """Generate and write the text file; return the decoded truth."""
    text, truth = generate(spec)
    Path(path).write_bytes(text)
    return truth
