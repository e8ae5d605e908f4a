"""Shared fixtures: a hand-written toy dataset and plain-Python oracles.

The oracle here deliberately avoids every package code path: fields are split
with str.split, parsed with int()/int(_, 16), vocabularies are insertion
ordered dicts, and the dense transform is math.log1p.  Tests freeze expected
values against this implementation, not against the code under test.
"""

import math

import numpy as np
import pytest

N_DENSE = 13
N_SPARSE = 26
N_COLUMNS = 40


def make_row(label, dense_fields, sparse_fields):
    """Join explicit field strings into one dataset line."""
    assert len(dense_fields) == N_DENSE and len(sparse_fields) == N_SPARSE
    return "\t".join([label, *dense_fields, *sparse_fields]) + "\n"


# Four rows exercising: negatives, missing dense, missing sparse, value reuse
# across rows, 8-digit hex, an all-missing row, and int32 boundary values.
TOY_ROWS = [
    make_row(
        "1",
        ["3", "-5", "", "0", "12", "999", "1", "7", "2", "", "45", "6", "10"],
        ["a", "1f", "", "ffffffff", "0", "7", "b2", "03", "c", "d4e", "5",
         "68ab", "f", "1", "2", "3", "4", "5", "6", "7", "8", "9", "aa",
         "bb", "cc", "dd"],
    ),
    make_row(
        "0",
        ["", "8", "-1", "2147483647", "0", "1", "2", "3", "4", "5", "6", "7",
         "8"],
        ["a", "20", "1", "ffffffff", "", "8", "b2", "04", "d", "d4e", "6",
         "68ab", "10", "2", "3", "4", "5", "6", "7", "8", "9", "a", "ab",
         "bc", "cd", "de"],
    ),
    make_row(
        "1",
        ["0", "-2147483647", "7", "1", "2", "3", "4", "5", "6", "7", "8", "9",
         ""],
        ["b", "1f", "0", "1a2b3c4d", "0", "7", "b3", "03", "c", "d4f", "5",
         "68ac", "f", "1", "2", "3", "4", "5", "6", "7", "8", "9", "aa",
         "bb", "cc", "dd"],
    ),
    make_row(
        "0",
        [""] * N_DENSE,
        [""] * N_SPARSE,
    ),
]

TOY_TEXT = "".join(TOY_ROWS).encode("ascii")


def oracle_parse(text):
    """Decode dataset text with plain Python: (labels, dense, sparse) lists."""
    labels, dense, sparse = [], [], []
    lines = text.decode("ascii").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for line in lines:
        fields = line.split("\t")
        assert len(fields) == N_COLUMNS, "oracle_parse expects valid rows"
        labels.append(int(fields[0]) if fields[0] else 0)
        dense.append([int(f) if f else 0 for f in fields[1:1 + N_DENSE]])
        sparse.append([int(f, 16) if f else 0 for f in fields[1 + N_DENSE:]])
    return labels, dense, sparse


def oracle_transform(text, modulus, apply_log=True):
    """Full two-pass oracle over valid text.

    Returns (labels, dense, sparse_ids) where dense holds float32 values and
    sparse_ids the first-appearance ranks of each residue.
    """
    labels, dense, sparse = oracle_parse(text)
    vocabs = [{} for _ in range(N_SPARSE)]
    for row in sparse:
        for col, value in enumerate(row):
            residue = value % modulus
            if residue not in vocabs[col]:
                vocabs[col][residue] = len(vocabs[col])
    dense_out = []
    for row in dense:
        out_row = []
        for value in row:
            clamped = max(value, 0)
            if apply_log:
                out_row.append(np.float32(math.log1p(clamped)))
            else:
                out_row.append(np.float32(clamped))
        dense_out.append(out_row)
    sparse_out = [[vocabs[col][value % modulus] for col, value in enumerate(row)]
                  for row in sparse]
    return labels, dense_out, sparse_out


def assert_batch_equal(got, want):
    """Exact equality of two decoded batches."""
    assert np.array_equal(got.labels, want.labels)
    assert np.array_equal(got.dense, want.dense)
    assert np.array_equal(got.sparse, want.sparse)


def assert_transformed_equal(got, want):
    """Bitwise equality of two transformed batches (float32 compared exactly)."""
    assert np.array_equal(got.labels, want.labels)
    assert got.dense.dtype == want.dense.dtype == np.float32
    assert np.array_equal(got.dense.view(np.uint32), want.dense.view(np.uint32))
    assert np.array_equal(got.sparse, want.sparse)


@pytest.fixture(scope="session")
def toy_text():
    return TOY_TEXT


@pytest.fixture(scope="session", autouse=True)
def _warm_decoder_kernels():
    """Trigger the jit compile of both decode kernels before any timed test."""
    from tabprep.decoder import decode_buffer

    row = b"0" + b"\t" * 39 + b"\n"
    decode_buffer(row, group_width=1)
    decode_buffer(row, group_width=4)
