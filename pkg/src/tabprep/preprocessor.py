"""Estimator-style facade over the two-pass pipeline.

fit() is pass 1 (vocabulary generation), transform() is pass 2 (feature
map).  Inputs may be raw tab-separated bytes, a path to a text or binary
record file, or an already-decoded batch; output is a dense float32 matrix
with columns [label, dense x13, sparse-id x26].
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import io_formats
from .decoder import decode_buffer, decode_file
from .ops import dense_transform, modulus_reduce
from .schema import N_COLUMNS, N_DENSE, N_SPARSE, DecodedRecord, RecordBatch
from .vocab import Vocabulary


def _coerce_batch(X, group_width: int) -> RecordBatch:
    if isinstance(X, RecordBatch):
        return X
    if isinstance(X, (bytes, bytearray, memoryview)):
        return decode_buffer(bytes(X), group_width=group_width)
    if isinstance(X, (str, Path)):
        path = Path(X)
        with open(path, "rb") as fh:
            magic = fh.read(4)
        if magic == io_formats.RECORD_MAGIC:
            batch = io_formats.read_records(path)
            if not isinstance(batch, RecordBatch):
                raise TypeError("record file holds transformed records, not input")
            return batch
        return decode_file(path, group_width=group_width)
    if isinstance(X, np.ndarray) and X.ndim == 2 and X.shape[1] == N_COLUMNS:
        return RecordBatch(
            labels=X[:, 0].astype(np.int32),
            dense=X[:, 1:1 + N_DENSE].astype(np.int32),
            sparse=X[:, 1 + N_DENSE:].astype(np.uint32),
        )
    if isinstance(X, (list, tuple)) and (not X or isinstance(X[0], DecodedRecord)):
        return RecordBatch.from_records(X)
    raise TypeError(f"cannot interpret {type(X).__name__} as decodable input")


class TabularPreprocessor(BaseEstimator, TransformerMixin):
    """Two-pass preprocessor for the fixed 40-column layout.

    Parameters
    ----------
    modulus : int
        Sparse hash domain size; vocabulary ids index into [0, modulus).
    apply_log : bool
        Apply log(x + 1) to clamped dense features.  When off, dense
        features are only clamped and cast.
    decode_group_width : int
        1 for the byte-at-a-time decoder, 4 for the group decoder.
    """

    def __init__(self, modulus: int = 5000, apply_log: bool = True,
                 decode_group_width: int = 4):
        self.modulus = modulus
        self.apply_log = apply_log
        self.decode_group_width = decode_group_width

    def _check_params(self):
        if self.modulus < 1:
            raise ValueError("modulus must be >= 1")
        if self.decode_group_width not in (1, 4):
            raise ValueError("decode_group_width must be 1 or 4")

    def fit(self, X, y=None):
        """Pass 1: build the 26 vocabulary tables from X."""
        self._check_params()
        self.vocabulary_ = Vocabulary(self.modulus)
        self.n_rows_fit_ = 0
        self.n_features_in_ = N_COLUMNS
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Extend the vocabularies with more rows, preserving earlier ids."""
        if not hasattr(self, "vocabulary_"):
            return self.fit(X)
        batch = _coerce_batch(X, self.decode_group_width)
        self.vocabulary_.observe_batch(modulus_reduce(batch.sparse, self.modulus))
        self.n_rows_fit_ += len(batch)
        self.vocab_sizes_ = self.vocabulary_.sizes()
        return self

    def transform(self, X) -> np.ndarray:
        """Pass 2: map X to a float32 matrix of shape (n, 40).

        Sparse residues never seen during fit raise MissingEntry.
        """
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("fit the preprocessor before calling transform")
        batch = _coerce_batch(X, self.decode_group_width)
        out = np.empty((len(batch), N_COLUMNS), dtype=np.float32)
        out[:, 0] = batch.labels
        out[:, 1:1 + N_DENSE] = dense_transform(batch.dense, apply_log=self.apply_log)
        ids = self.vocabulary_.lookup_batch(modulus_reduce(batch.sparse, self.modulus))
        out[:, 1 + N_DENSE:] = ids
        return out

    def get_feature_names_out(self, input_features=None):
        names = ["label"]
        names += [f"dense_{j}" for j in range(N_DENSE)]
        names += [f"sparse_{j}" for j in range(N_SPARSE)]
        return np.asarray(names, dtype=object)
