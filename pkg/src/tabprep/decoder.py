"""Streaming text-to-record decoding on top of the compiled kernels.

A StreamDecoder accepts raw bytes in chunks of any size and yields columnar
batches of completed rows.  Splitting a stream differently never changes the
decoded output or the position of the first error; the group decoder keeps
its four-byte groups aligned to absolute stream offsets by buffering up to
three bytes between calls.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

import numpy as np

from . import _kernels as K
from .errors import ArityError, FieldOverflow, InvalidByte
from .schema import N_DENSE, N_SPARSE, RecordBatch

DEFAULT_CHUNK_BYTES = 1 << 20


def _as_byte_array(data) -> np.ndarray:
    if isinstance(data, np.ndarray):
        if data.dtype != np.uint8:
            raise TypeError("byte arrays must have dtype uint8")
        return data
    return np.frombuffer(data, dtype=np.uint8)


def _error_from_state(st: np.ndarray) -> Exception:
    code = int(st[K.S_ERR])
    row, col, byte = int(st[K.S_EROW]), int(st[K.S_ECOL]), int(st[K.S_EBYTE])
    if code == K.ST_INVALID:
        return InvalidByte(row, col, byte)
    if code == K.ST_OVERFLOW:
        return FieldOverflow(row, col)
    if code == K.ST_ARITY:
        return ArityError(row)
    raise AssertionError(f"unknown status code {code}")


class StreamDecoder:
    """Incremental decoder; one instance per input stream.

    group_width selects the kernel: 1 steps bytes, 4 dispatches on
    delimiter-mask groups.  Both produce identical results.
    """

    def __init__(self, group_width: int = 4):
        if group_width not in (1, 4):
            raise ValueError("group width must be 1 or 4")
        self.group_width = group_width
        self._st = np.zeros(K.NSTATE, dtype=np.int64)
        self._tail = np.empty(0, dtype=np.uint8)
        self._pending_label = np.zeros(1, dtype=np.int32)
        self._pending_dense = np.zeros((1, N_DENSE), dtype=np.int32)
        self._pending_sparse = np.zeros((1, N_SPARSE), dtype=np.uint32)
        self._error: Exception | None = None
        self._finished = False

    @property
    def rows_decoded(self) -> int:
        return int(self._st[K.S_ROW])

    def _run(self, buf: np.ndarray) -> RecordBatch:
        # capacity: one slot per newline, plus one scratch slot for the row
        # still open when the chunk ends
        cap = int(np.count_nonzero(buf == 0x0A)) + 1
        labels = np.empty(cap, dtype=np.int32)
        dense = np.empty((cap, N_DENSE), dtype=np.int32)
        sparse = np.empty((cap, N_SPARSE), dtype=np.uint32)
        labels[0] = self._pending_label[0]
        dense[0] = self._pending_dense[0]
        sparse[0] = self._pending_sparse[0]
        self._st[K.S_OUT] = 0
        if self.group_width == 4:
            status = K.decode_group4(buf, self._st, labels, dense, sparse)
        else:
            status = K.decode_scalar(buf, self._st, labels, dense, sparse)
        done = int(self._st[K.S_OUT])
        if status != K.ST_OK:
            self._error = _error_from_state(self._st)
            raise self._error
        # stash whatever was emitted for the still-open row
        self._pending_label[0] = labels[done]
        self._pending_dense[0] = dense[done]
        self._pending_sparse[0] = sparse[done]
        return RecordBatch(labels=labels[:done], dense=dense[:done], sparse=sparse[:done])

    def feed(self, data) -> RecordBatch:
        """Consume a chunk; return the rows completed by it."""
        if self._error is not None:
            raise self._error
        if self._finished:
            raise RuntimeError("decoder already finished")
        chunk = _as_byte_array(data)
        if self._tail.size:
            chunk = np.concatenate([self._tail, chunk])
            self._tail = np.empty(0, dtype=np.uint8)
        if self.group_width == 4:
            keep = chunk.shape[0] % 4
            if keep:
                self._tail = chunk[chunk.shape[0] - keep:].copy()
                chunk = chunk[:chunk.shape[0] - keep]
        if chunk.shape[0] == 0:
            return RecordBatch.empty()
        return self._run(chunk)

    def finish(self) -> RecordBatch:
        """Flush buffered bytes and close the stream.

        A final row missing its newline is accepted iff all 40 fields are
        present; anything shorter raises ArityError.
        """
        if self._error is not None:
            raise self._error
        if self._finished:
            raise RuntimeError("decoder already finished")
        self._finished = True
        batches = []
        if self._tail.size:
            tail, self._tail = self._tail, np.empty(0, dtype=np.uint8)
            group_width, self.group_width = self.group_width, 1
            try:
                batches.append(self._run(tail))
            finally:
                self.group_width = group_width
        st = self._st
        mid_field = st[K.S_FLEN] > 0 or st[K.S_NEG] > 0
        if st[K.S_COL] == 0 and not mid_field:
            pass  # stream ended on a row boundary
        elif st[K.S_COL] == K.LAST_COL:
            batches.append(self._run(np.array([0x0A], dtype=np.uint8)))
        else:
            self._error = ArityError(int(st[K.S_ROW]))
            raise self._error
        return RecordBatch.concat(batches)


def decode_buffer(data, group_width: int = 4) -> RecordBatch:
    """Decode a complete in-memory stream in one call."""
    dec = StreamDecoder(group_width=group_width)
    head = dec.feed(data)
    tail = dec.finish()
    if len(tail) == 0:
        return head
    return RecordBatch.concat([head, tail])


def iter_decode_file(path: str | Path, group_width: int = 4,
                     chunk_bytes: int = DEFAULT_CHUNK_BYTES) -> Iterator[RecordBatch]:
    """Decode a file chunk by chunk, yielding non-empty batches."""
    dec = StreamDecoder(group_width=group_width)
    with open(path, "rb") as fh:
        while True:
            piece = fh.read(chunk_bytes)
            if not piece:
                break
            batch = dec.feed(piece)
            if len(batch):
                yield batch
    batch = dec.finish()
    if len(batch):
        yield batch


def decode_file(path: str | Path, group_width: int = 4,
                chunk_bytes: int | None = None) -> RecordBatch:
    """Decode a whole file into one batch."""
    if chunk_bytes is None:
        data = Path(path).read_bytes()
        return decode_buffer(data, group_width=group_width)
    return RecordBatch.concat(iter_decode_file(path, group_width, chunk_bytes))
