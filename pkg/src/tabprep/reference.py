"""Plain-Python reference implementation of the full pipeline.

This is the executable specification: no compiled kernels, no threads, no
batching tricks.  One pass builds per-column insertion-ordered dicts, one
pass applies them.  It exists to gate benchmark cells and to cross-check
the engines; it is orders of magnitude slower than either and that is the
point.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArityError, FieldOverflow, InvalidByte, MissingEntry
from .schema import N_COLUMNS, N_DENSE, N_SPARSE, RecordBatch, TransformedBatch

_INT32_MAX = 2**31 - 1


def _parse_field(row: int, col: int, field: str) -> int:
    """One field, scanned left to right so error order matches the byte stream."""
    if col > N_DENSE:  # hex column
        digits = 0
        value = 0
        for ch in field:
            if not (ch.isdigit() or ch in "abcdef"):
                raise InvalidByte(row, col, ord(ch))
            digits += 1
            if digits > 8:
                raise FieldOverflow(row, col)
            value = value * 16 + int(ch, 16)
        return value
    negative = False
    value = 0
    for pos, ch in enumerate(field):
        if ch == "-" and col != 0 and pos == 0:
            negative = True
            continue
        if not ch.isdigit():
            raise InvalidByte(row, col, ord(ch))
        value = value * 10 + int(ch)
        if value > _INT32_MAX:
            raise FieldOverflow(row, col)
    return -value if negative else value


def parse_rows(text: bytes) -> RecordBatch:
    """Field-by-field parse; a second opinion on the decoders."""
    labels, dense_rows, sparse_rows = [], [], []
    pieces = text.decode("ascii").split("\n")
    if pieces and pieces[-1] == "":
        pieces.pop()  # trailing piece after the final newline
    for row, line in enumerate(pieces):
        fields = line.split("\t")
        values = [_parse_field(row, col, fields[col])
                  for col in range(min(len(fields), N_COLUMNS))]
        if len(fields) != N_COLUMNS:
            raise ArityError(row)
        labels.append(values[0])
        dense_rows.append(values[1:1 + N_DENSE])
        sparse_rows.append(values[1 + N_DENSE:])
    n = len(labels)
    return RecordBatch(
        labels=np.array(labels, dtype=np.int32),
        dense=np.array(dense_rows, dtype=np.int32).reshape(n, N_DENSE),
        sparse=np.array(sparse_rows, dtype=np.uint32).reshape(n, N_SPARSE),
    )


def build_vocabs(batch: RecordBatch, modulus: int) -> list[dict[int, int]]:
    """Pass 1: insertion-ordered dict per sparse column."""
    vocabs: list[dict[int, int]] = [{} for _ in range(N_SPARSE)]
    sparse = batch.sparse.tolist()
    for srow in sparse:
        for col in range(N_SPARSE):
            residue = srow[col] % modulus
            vocab = vocabs[col]
            if residue not in vocab:
                vocab[residue] = len(vocab)
    return vocabs


def apply_vocabs(batch: RecordBatch, vocabs: list[dict[int, int]], modulus: int,
                 apply_log: bool = True) -> TransformedBatch:
    """Pass 2: dense map plus table lookup, value by value."""
    n = len(batch)
    dense = np.empty((n, N_DENSE), dtype=np.float32)
    sparse = np.empty((n, N_SPARSE), dtype=np.uint32)
    dense_rows = batch.dense.tolist()
    sparse_rows = batch.sparse.tolist()
    for i in range(n):
        drow = dense_rows[i]
        for j in range(N_DENSE):
            x = max(drow[j], 0)
            dense[i, j] = np.float32(math.log1p(float(x))) if apply_log else np.float32(x)
        srow = sparse_rows[i]
        for j in range(N_SPARSE):
            residue = srow[j] % modulus
            try:
                sparse[i, j] = vocabs[j][residue]
            except KeyError:
                raise MissingEntry(residue) from None
    return TransformedBatch(labels=batch.labels.copy(), dense=dense, sparse=sparse)


def reference_pipeline(batch: RecordBatch, modulus: int,
                       apply_log: bool = True) -> tuple[TransformedBatch, list[dict[int, int]]]:
    """Both passes over an already-decoded batch."""
    vocabs = build_vocabs(batch, modulus)
    return apply_vocabs(batch, vocabs, modulus, apply_log), vocabs
