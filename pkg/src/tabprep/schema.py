"""Dataset schema, pipeline configuration, and the record types every stage exchanges.

The dataset shape is fixed: one integer label, 13 signed dense features, and
26 unsigned sparse hash values per row, in that column order.  Records exist
both as single immutable objects (the contract surface) and as columnar
batches of numpy arrays (what the engines actually move around).
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import ConfigError

N_DENSE = 13
N_SPARSE = 26
N_COLUMNS = 1 + N_DENSE + N_SPARSE

_INT32_MIN = -(2**31)
_INT32_MAX = 2**31 - 1
_UINT32_MAX = 2**32 - 1


class ColumnKind(enum.IntEnum):
    LABEL = 0
    DENSE = 1
    SPARSE = 2


@dataclass(frozen=True)
class DatasetSchema:
    """Fixed 40-column layout: label, dense 0..12, sparse 0..25."""

    n_dense: int = N_DENSE
    n_sparse: int = N_SPARSE
    has_label: bool = True

    def __post_init__(self):
        if (self.n_dense, self.n_sparse, self.has_label) != (N_DENSE, N_SPARSE, True):
            raise ValueError("only the fixed 1+13+26 column layout is supported")

    @property
    def n_columns(self) -> int:
        return 1 + self.n_dense + self.n_sparse

    def column_kind(self, index: int) -> ColumnKind:
        if index == 0:
            return ColumnKind.LABEL
        if 1 <= index <= self.n_dense:
            return ColumnKind.DENSE
        if self.n_dense < index < self.n_columns:
            return ColumnKind.SPARSE
        raise IndexError(f"column index {index} out of range")

    def column_kinds(self) -> np.ndarray:
        """Per-column kind codes as a uint8 array of length 40."""
        kinds = np.empty(self.n_columns, dtype=np.uint8)
        kinds[0] = ColumnKind.LABEL
        kinds[1:1 + self.n_dense] = ColumnKind.DENSE
        kinds[1 + self.n_dense:] = ColumnKind.SPARSE
        return kinds


CRITEO_SCHEMA = DatasetSchema()


@dataclass(frozen=True)
class DecodedRecord:
    """One parsed row: label, 13 signed dense integers, 26 unsigned sparse hashes."""

    label: int
    dense: tuple
    sparse: tuple

    def __post_init__(self):
        if len(self.dense) != N_DENSE:
            raise ValueError(f"dense arity {len(self.dense)} != {N_DENSE}")
        if len(self.sparse) != N_SPARSE:
            raise ValueError(f"sparse arity {len(self.sparse)} != {N_SPARSE}")
        if not _INT32_MIN <= self.label <= _INT32_MAX:
            raise ValueError("label outside 32-bit signed range")
        for x in self.dense:
            if not _INT32_MIN <= x <= _INT32_MAX:
                raise ValueError("dense value outside 32-bit signed range")
        for v in self.sparse:
            if not 0 <= v <= _UINT32_MAX:
                raise ValueError("sparse value outside 32-bit unsigned range")


@dataclass(frozen=True)
class TransformedRecord:
    """One output row: label passthrough, 13 real dense features, 26 vocabulary ids."""

    label: int
    dense: tuple
    sparse: tuple

    def __post_init__(self):
        if len(self.dense) != N_DENSE:
            raise ValueError(f"dense arity {len(self.dense)} != {N_DENSE}")
        if len(self.sparse) != N_SPARSE:
            raise ValueError(f"sparse arity {len(self.sparse)} != {N_SPARSE}")


@dataclass
class RecordBatch:
    """Columnar slab of decoded records.

    labels: int32[n], dense: int32[n, 13], sparse: uint32[n, 26].
    """

    labels: np.ndarray
    dense: np.ndarray
    sparse: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def empty(cls) -> "RecordBatch":
        return cls(
            labels=np.empty(0, dtype=np.int32),
            dense=np.empty((0, N_DENSE), dtype=np.int32),
            sparse=np.empty((0, N_SPARSE), dtype=np.uint32),
        )

    @classmethod
    def from_records(cls, records: Iterable[DecodedRecord]) -> "RecordBatch":
        rows = list(records)
        return cls(
            labels=np.array([r.label for r in rows], dtype=np.int32),
            dense=np.array([r.dense for r in rows], dtype=np.int32).reshape(len(rows), N_DENSE),
            sparse=np.array([r.sparse for r in rows], dtype=np.uint32).reshape(len(rows), N_SPARSE),
        )

    def to_records(self) -> Iterator[DecodedRecord]:
        for i in range(len(self)):
            yield DecodedRecord(
                label=int(self.labels[i]),
                dense=tuple(int(x) for x in self.dense[i]),
                sparse=tuple(int(v) for v in self.sparse[i]),
            )

    @staticmethod
    def concat(batches: Iterable["RecordBatch"]) -> "RecordBatch":
        parts = list(batches)
        if not parts:
            return RecordBatch.empty()
        return RecordBatch(
            labels=np.concatenate([b.labels for b in parts]),
            dense=np.concatenate([b.dense for b in parts]),
            sparse=np.concatenate([b.sparse for b in parts]),
        )


@dataclass
class TransformedBatch:
    """Columnar slab of transformed records.

    labels: int32[n], dense: float32[n, 13], sparse: uint32[n, 26].
    """

    labels: np.ndarray
    dense: np.ndarray
    sparse: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def empty(cls) -> "TransformedBatch":
        return cls(
            labels=np.empty(0, dtype=np.int32),
            dense=np.empty((0, N_DENSE), dtype=np.float32),
            sparse=np.empty((0, N_SPARSE), dtype=np.uint32),
        )

    def to_records(self) -> Iterator[TransformedRecord]:
        for i in range(len(self)):
            yield TransformedRecord(
                label=int(self.labels[i]),
                dense=tuple(float(x) for x in self.dense[i]),
                sparse=tuple(int(v) for v in self.sparse[i]),
            )

    @staticmethod
    def concat(batches: Iterable["TransformedBatch"]) -> "TransformedBatch":
        parts = list(batches)
        if not parts:
            return TransformedBatch.empty()
        return TransformedBatch(
            labels=np.concatenate([b.labels for b in parts]),
            dense=np.concatenate([b.dense for b in parts]),
            sparse=np.concatenate([b.sparse for b in parts]),
        )


VALID_GROUP_WIDTHS = (1, 4)
VALID_ENCODINGS = ("utf8", "binary")
VALID_SPILL_MODES = ("memory", "disk")


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable knobs shared by every engine.

    channel_capacity is counted in records, not batches.
    """

    modulus: int = 5000
    decode_group_width: int = 4
    channel_capacity: int = 65536
    rowwise_threads: int = 1
    input_encoding: str = "utf8"
    intermediate_spill: str = "memory"
    apply_log: bool = True

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


def validate_config(cfg: PipelineConfig) -> PipelineConfig:
    """Return cfg unchanged iff every invariant holds, else raise ConfigError.

    The first violated invariant is reported with its field name.
    """
    if cfg.modulus < 1:
        raise ConfigError("modulus", "modulus must be >= 1")
    if cfg.decode_group_width not in VALID_GROUP_WIDTHS:
        raise ConfigError("decode_group_width", "unsupported group width")
    if cfg.channel_capacity < 1:
        raise ConfigError("channel_capacity", "channel capacity must be >= 1")
    if cfg.rowwise_threads < 1:
        raise ConfigError("rowwise_threads", "thread count must be >= 1")
    if cfg.input_encoding not in VALID_ENCODINGS:
        raise ConfigError("input_encoding", f"must be one of {VALID_ENCODINGS}")
    if cfg.intermediate_spill not in VALID_SPILL_MODES:
        raise ConfigError("intermediate_spill", f"must be one of {VALID_SPILL_MODES}")
    return cfg


_BOOL_STRINGS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}

_CONFIG_FIELDS = {
    "modulus": int,
    "decode_group_width": int,
    "channel_capacity": int,
    "rowwise_threads": int,
    "input_encoding": str,
    "intermediate_spill": str,
    "apply_log": "bool",
}


def config_from_mapping(values: Mapping[str, str], base: PipelineConfig | None = None) -> PipelineConfig:
    """Build a config from string key/value pairs, starting from base."""
    cfg = base or PipelineConfig()
    changes = {}
    for key, raw in values.items():
        if key not in _CONFIG_FIELDS:
            raise ConfigError(key, "unknown configuration key")
        kind = _CONFIG_FIELDS[key]
        if kind == "bool":
            try:
                changes[key] = _BOOL_STRINGS[str(raw).strip().lower()]
            except KeyError:
                raise ConfigError(key, f"not a boolean: {raw!r}") from None
        elif kind is int:
            try:
                changes[key] = int(str(raw).strip())
            except ValueError:
                raise ConfigError(key, f"not an integer: {raw!r}") from None
        else:
            changes[key] = str(raw).strip()
    return validate_config(cfg.replace(**changes))


def load_config_file(path: str | Path, base: PipelineConfig | None = None) -> PipelineConfig:
    """Parse a plain key=value config file ('#' starts a comment)."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}", f"expected key=value, got {line!r}")
        key, value = stripped.split("=", 1)
        values[key.strip()] = value.strip()
    return config_from_mapping(values, base=base)
