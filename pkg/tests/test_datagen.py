"""Synthetic dataset generator: determinism, shape, and truth agreement."""

import re

import numpy as np
import pytest

from conftest import assert_batch_equal
from tabprep.datagen import SyntheticSpec, generate, write_text
from tabprep.decoder import decode_buffer
from tabprep.errors import ConfigError


def test_deterministic_for_same_seed():
    spec = SyntheticSpec(n_rows=200, seed=42)
    text_a, truth_a = generate(spec)
    text_b, truth_b = generate(spec)
    assert text_a == text_b
    assert_batch_equal(truth_a, truth_b)


def test_different_seeds_differ():
    a, _ = generate(SyntheticSpec(n_rows=50, seed=1))
    b, _ = generate(SyntheticSpec(n_rows=50, seed=2))
    assert a != b


def test_zero_rows_empty_file():
    text, truth = generate(SyntheticSpec(n_rows=0))
    assert text == b""
    assert len(truth) == 0


def test_truth_matches_decoder():
    # the generator's own record batch must agree with decoding its text
    for missing in (0.0, 0.3, 1.0):
        spec = SyntheticSpec(n_rows=300, seed=7, missing_prob=missing)
        text, truth = generate(spec)
        assert_batch_equal(decode_buffer(text), truth)


def test_all_missing_rows_are_label_plus_39_tabs():
    text, truth = generate(SyntheticSpec(n_rows=100, seed=3, missing_prob=1.0))
    for line in text.decode("ascii").splitlines():
        assert re.fullmatch(r"\d+\t{39}", line)
    assert not truth.dense.any()
    assert not truth.sparse.any()


def test_missing_fields_decode_to_zero():
    spec = SyntheticSpec(n_rows=500, seed=9, missing_prob=0.5)
    text, truth = generate(spec)
    lines = text.decode("ascii").splitlines()
    fields = lines[0].split("\t")
    assert len(fields) == 40
    for i, f in enumerate(fields[1:14]):
        if f == "":
            assert truth.dense[0, i] == 0


def test_fixed_hex_width():
    text, _ = generate(SyntheticSpec(n_rows=120, seed=4, missing_prob=0.0,
                                     hex_width=8))
    for line in text.decode("ascii").splitlines():
        for f in line.split("\t")[14:]:
            assert len(f) == 8


def test_dense_value_range_honored():
    spec = SyntheticSpec(n_rows=400, seed=5, missing_prob=0.0,
                         dense_low=-7, dense_high=12)
    _, truth = generate(spec)
    assert truth.dense.min() >= -7
    assert truth.dense.max() <= 12


def test_write_text_round_trip(tmp_path):
    path = tmp_path / "synthetic.txt"
    spec = SyntheticSpec(n_rows=250, seed=6)
    truth = write_text(path, spec)
    assert_batch_equal(decode_buffer(path.read_bytes()), truth)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SyntheticSpec(n_rows=-1)
    with pytest.raises(ConfigError):
        SyntheticSpec(n_rows=1, missing_prob=1.5)
    with pytest.raises(ConfigError):
        SyntheticSpec(n_rows=1, missing_prob=-0.1)
    with pytest.raises(ConfigError):
        SyntheticSpec(n_rows=1, hex_width=9)
    with pytest.raises(ConfigError):
        SyntheticSpec(n_rows=1, dense_low=5, dense_high=4)


def test_labels_are_binary():
    _, truth = generate(SyntheticSpec(n_rows=300, seed=8))
    assert set(np.unique(truth.labels).tolist()) <= {0, 1}
