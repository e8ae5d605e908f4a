"""Binary file formats for record slabs and vocabularies.

Record files ("PBIN"): a 24-byte header followed by fixed 160-byte records,
little-endian throughout.

    offset  size  field
    0       4     magic  b"PBIN"
    4       2     format version (currently 1)
    6       1     record kind: 0 decoded, 1 transformed
    7       1     padding
    8       8     row count
    16      1     dense column count (13)
    17      1     sparse column count (26)
    18      6     padding

Decoded records hold int32 label, 13 int32 dense, 26 uint32 sparse.
Transformed records differ only in dense type: float32.

Vocabulary sidecars ("PVOC"): one section per table, each a 16-byte header
(magic, version u32, modulus u32, entry count u32) followed by that many
(value u32, id u32) pairs in id order.  A full 26-column vocabulary is 26
consecutive sections sharing one modulus.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import BadMagic, FormatError, RowCountMismatch, ShortRead, VersionMismatch
from .schema import N_DENSE, N_SPARSE, RecordBatch, TransformedBatch
from .vocab import VocabTable, Vocabulary

RECORD_MAGIC = b"PBIN"
RECORD_VERSION = 1
RECORD_HEADER = struct.Struct("<4sHBxQBB6x")
RECORD_BYTES = 160

KIND_DECODED = 0
KIND_TRANSFORMED = 1

DECODED_DTYPE = np.dtype([
    ("label", "<i4"),
    ("dense", "<i4", (N_DENSE,)),
    ("sparse", "<u4", (N_SPARSE,)),
])
TRANSFORMED_DTYPE = np.dtype([
    ("label", "<i4"),
    ("dense", "<f4", (N_DENSE,)),
    ("sparse", "<u4", (N_SPARSE,)),
])
assert DECODED_DTYPE.itemsize == RECORD_BYTES
assert TRANSFORMED_DTYPE.itemsize == RECORD_BYTES

VOCAB_MAGIC = b"PVOC"
VOCAB_VERSION = 1
VOCAB_HEADER = struct.Struct("<4sIII")


def pack_record_header(kind: int, rows: int) -> bytes:
    """The 24-byte record file header for a given kind and row count."""
    return RECORD_HEADER.pack(RECORD_MAGIC, RECORD_VERSION, kind, rows, N_DENSE, N_SPARSE)


_pack_header = pack_record_header


def _batch_to_structured(batch) -> np.ndarray:
    if isinstance(batch, TransformedBatch):
        arr = np.empty(len(batch), dtype=TRANSFORMED_DTYPE)
    else:
        arr = np.empty(len(batch), dtype=DECODED_DTYPE)
    arr["label"] = batch.labels
    arr["dense"] = batch.dense
    arr["sparse"] = batch.sparse
    return arr


def _structured_to_batch(arr: np.ndarray, kind: int):
    if kind == KIND_DECODED:
        return RecordBatch(
            labels=np.ascontiguousarray(arr["label"]),
            dense=np.ascontiguousarray(arr["dense"]),
            sparse=np.ascontiguousarray(arr["sparse"]),
        )
    return TransformedBatch(
        labels=np.ascontiguousarray(arr["label"]),
        dense=np.ascontiguousarray(arr["dense"]),
        sparse=np.ascontiguousarray(arr["sparse"]),
    )


def kind_of(batch) -> int:
    return KIND_TRANSFORMED if isinstance(batch, TransformedBatch) else KIND_DECODED


def write_records(path: str | Path, batch) -> None:
    """Write one batch as a complete record file."""
    with open(path, "wb") as fh:
        fh.write(_pack_header(kind_of(batch), len(batch)))
        fh.write(_batch_to_structured(batch).tobytes())


class RecordWriter:
    """Streaming writer; patches the header row count on close."""

    def __init__(self, path: str | Path, kind: int):
        if kind not in (KIND_DECODED, KIND_TRANSFORMED):
            raise ValueError("unknown record kind")
        self.kind = kind
        self.rows = 0
        self._fh = open(path, "wb")
        self._fh.write(_pack_header(kind, 0))

    def write(self, batch) -> None:
        if kind_of(batch) != self.kind:
            raise ValueError("batch kind does not match writer kind")
        self._fh.write(_batch_to_structured(batch).tobytes())
        self.rows += len(batch)

    def close(self) -> None:
        if self._fh.closed:
            return
        self._fh.seek(0)
        self._fh.write(_pack_header(self.kind, self.rows))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_header(path: str | Path) -> tuple[int, int]:
    """Return (kind, row count) after validating the header."""
    with open(path, "rb") as fh:
        head = fh.read(RECORD_HEADER.size)
    if len(head) < RECORD_HEADER.size:
        raise FormatError("file too short for a record header")
    magic, version, kind, rows, nd, ns = RECORD_HEADER.unpack(head)
    if magic != RECORD_MAGIC:
        raise BadMagic(magic)
    if version != RECORD_VERSION:
        raise VersionMismatch(version, RECORD_VERSION)
    if (nd, ns) != (N_DENSE, N_SPARSE):
        raise FormatError(f"unsupported column layout {nd}+{ns}")
    if kind not in (KIND_DECODED, KIND_TRANSFORMED):
        raise FormatError(f"unknown record kind {kind}")
    return kind, rows


def read_records(path: str | Path):
    """Read a whole record file into a batch, validating the row count."""
    kind, rows = read_header(path)
    payload = Path(path).stat().st_size - RECORD_HEADER.size
    if payload % RECORD_BYTES:
        raise ShortRead(payload // RECORD_BYTES)
    actual = payload // RECORD_BYTES
    if actual != rows:
        raise RowCountMismatch(rows, actual)
    dtype = DECODED_DTYPE if kind == KIND_DECODED else TRANSFORMED_DTYPE
    arr = np.fromfile(path, dtype=dtype, offset=RECORD_HEADER.size)
    return _structured_to_batch(arr, kind)


def iter_read_records(path: str | Path, rows_per_batch: int = 65536) -> Iterator:
    """Yield batches of at most rows_per_batch from a record file."""
    kind, rows = read_header(path)
    payload = Path(path).stat().st_size - RECORD_HEADER.size
    if payload % RECORD_BYTES:
        raise ShortRead(payload // RECORD_BYTES)
    if payload // RECORD_BYTES != rows:
        raise RowCountMismatch(rows, payload // RECORD_BYTES)
    dtype = DECODED_DTYPE if kind == KIND_DECODED else TRANSFORMED_DTYPE
    with open(path, "rb") as fh:
        fh.seek(RECORD_HEADER.size)
        remaining = rows
        while remaining > 0:
            take = min(remaining, rows_per_batch)
            raw = fh.read(take * RECORD_BYTES)
            arr = np.frombuffer(raw, dtype=dtype)
            yield _structured_to_batch(arr, kind)
            remaining -= take


def pack_decoded(record) -> bytes:
    """One decoded record as its 160-byte wire form."""
    arr = np.zeros(1, dtype=DECODED_DTYPE)
    arr["label"][0] = record.label
    arr["dense"][0] = record.dense
    arr["sparse"][0] = record.sparse
    return arr.tobytes()


def unpack_decoded(raw: bytes):
    """Inverse of pack_decoded."""
    from .schema import DecodedRecord
    if len(raw) != RECORD_BYTES:
        raise ShortRead(0)
    arr = np.frombuffer(raw, dtype=DECODED_DTYPE)
    return DecodedRecord(label=int(arr["label"][0]),
                         dense=tuple(int(x) for x in arr["dense"][0]),
                         sparse=tuple(int(v) for v in arr["sparse"][0]))


def pack_transformed(record) -> bytes:
    """One transformed record as its 160-byte wire form."""
    arr = np.zeros(1, dtype=TRANSFORMED_DTYPE)
    arr["label"][0] = record.label
    arr["dense"][0] = record.dense
    arr["sparse"][0] = record.sparse
    return arr.tobytes()


def unpack_transformed(raw: bytes):
    """Inverse of pack_transformed."""
    from .schema import TransformedRecord
    if len(raw) != RECORD_BYTES:
        raise ShortRead(0)
    arr = np.frombuffer(raw, dtype=TRANSFORMED_DTYPE)
    return TransformedRecord(label=int(arr["label"][0]),
                             dense=tuple(float(x) for x in arr["dense"][0]),
                             sparse=tuple(int(v) for v in arr["sparse"][0]))


def _rebatch(batches, rows_per_batch: int):
    """Split oversized batches so no yielded batch exceeds rows_per_batch."""
    for batch in batches:
        n = len(batch)
        if n <= rows_per_batch:
            yield batch
            continue
        for start in range(0, n, rows_per_batch):
            stop = start + rows_per_batch
            yield type(batch)(labels=batch.labels[start:stop],
                              dense=batch.dense[start:stop],
                              sparse=batch.sparse[start:stop])


def read_source(path: str | Path, encoding: str = "utf8", group_width: int = 4,
                rows_per_batch: int = 65536):
    """A replayable source: each call of the factory re-reads the file.

    rows_per_batch caps batch size for both encodings; text input is decoded
    in fixed byte chunks and re-sliced.
    """
    from .decoder import iter_decode_file
    if encoding == "binary":
        def factory():
            kind, _ = read_header(path)
            if kind != KIND_DECODED:
                raise FormatError("record file holds transformed output, not decoder input")
            return iter_read_records(path, rows_per_batch)
    elif encoding == "utf8":
        def factory():
            return _rebatch(iter_decode_file(path, group_width=group_width),
                            rows_per_batch)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    return factory


def decode_record_payload(raw: bytes, kind: int):
    """Decode headerless record bytes, as carried by network data frames."""
    if len(raw) % RECORD_BYTES:
        raise ShortRead(len(raw) // RECORD_BYTES)
    dtype = DECODED_DTYPE if kind == KIND_DECODED else TRANSFORMED_DTYPE
    return _structured_to_batch(np.frombuffer(raw, dtype=dtype), kind)


def encode_record_payload(batch) -> bytes:
    """Inverse of decode_record_payload."""
    return _batch_to_structured(batch).tobytes()


def table_section(table: VocabTable) -> bytes:
    """One serialized table: header plus (value, id) pairs in id order."""
    values = table.values_in_id_order()
    pairs = np.empty((values.size, 2), dtype="<u4")
    pairs[:, 0] = values
    pairs[:, 1] = np.arange(values.size, dtype=np.uint32)
    return VOCAB_HEADER.pack(VOCAB_MAGIC, VOCAB_VERSION, table.modulus,
                             values.size) + pairs.tobytes()


def _read_table_section(data: bytes, pos: int) -> tuple[VocabTable, int]:
    if pos + VOCAB_HEADER.size > len(data):
        raise FormatError("truncated vocabulary table header")
    magic, version, modulus, entries = VOCAB_HEADER.unpack_from(data, pos)
    if magic != VOCAB_MAGIC:
        raise BadMagic(magic, expected=VOCAB_MAGIC)
    if version != VOCAB_VERSION:
        raise VersionMismatch(version, VOCAB_VERSION)
    pos += VOCAB_HEADER.size
    end = pos + entries * 8
    if end > len(data):
        raise FormatError("truncated vocabulary table entries")
    pairs = np.frombuffer(data, dtype="<u4", count=entries * 2, offset=pos).reshape(-1, 2)
    table = VocabTable.from_pairs([(int(v), int(i)) for v, i in pairs], modulus)
    return table, end


def save_vocab_table(path: str | Path, table: VocabTable) -> None:
    Path(path).write_bytes(table_section(table))


def load_vocab_table(path: str | Path) -> VocabTable:
    data = Path(path).read_bytes()
    table, end = _read_table_section(data, 0)
    if end != len(data):
        raise FormatError("trailing bytes after table")
    return table


def save_vocabulary(path: str | Path, vocabulary: Vocabulary) -> None:
    """Write the 26 tables as consecutive sidecar sections."""
    with open(path, "wb") as fh:
        for table in vocabulary.tables:
            fh.write(table_section(table))


def load_vocabulary(path: str | Path) -> Vocabulary:
    data = Path(path).read_bytes()
    tables = []
    pos = 0
    while pos < len(data):
        table, pos = _read_table_section(data, pos)
        tables.append(table)
    if len(tables) != N_SPARSE:
        raise FormatError(f"expected {N_SPARSE} tables, found {len(tables)}")
    moduli = {t.modulus for t in tables}
    if len(moduli) != 1:
        raise FormatError(f"tables disagree on modulus: {sorted(moduli)}")
    return Vocabulary(moduli.pop(), tables)
