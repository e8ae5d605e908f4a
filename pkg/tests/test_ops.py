"""Stateless column operators, pinned against independent numeric oracles.

Expected logarithm values come from mpmath at 50 digits of working precision,
rounded once to float32.  Modulus expectations come from Python's unbounded
integer arithmetic.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabprep.ops import dense_transform, log_transform, modulus_reduce, negatives_to_zero

UINT32_MAX = 2**32 - 1


def f32_log1p(x):
    """ln(x+1) at 50-digit precision, rounded once to float32."""
    with mpmath.workdps(50):
        return np.float32(mpmath.log(mpmath.mpf(x) + 1))


class TestNegativesToZero:
    def test_pinned_values(self):
        assert negatives_to_zero(-5) == 0
        assert negatives_to_zero(7) == 7
        assert negatives_to_zero(0) == 0

    def test_array_form(self):
        arr = np.array([-3, -1, 0, 1, 99], dtype=np.int32)
        out = negatives_to_zero(arr)
        assert out.tolist() == [0, 0, 0, 1, 99]
        # input is never mutated
        assert arr.tolist() == [-3, -1, 0, 1, 99]

    @given(st.integers(min_value=-(2**31), max_value=2**31 - 1))
    def test_never_negative_and_idempotent(self, x):
        y = int(negatives_to_zero(np.int32(x)))
        assert y >= 0
        assert y == (x if x >= 0 else 0)
        assert int(negatives_to_zero(np.int32(y))) == y


class TestLogTransform:
    def test_zero_maps_to_zero(self):
        assert log_transform(0) == np.float32(0.0)

    def test_pinned_against_high_precision_oracle(self):
        # ln(2) ~ 0.6931472 and ln(1000) ~ 6.9077553; equality below is exact
        # float32 equality, the literals are checked to within one ulp
        assert log_transform(1) == f32_log1p(1)
        assert log_transform(999) == f32_log1p(999)
        assert abs(float(log_transform(1)) - 0.6931472) < 5e-7
        assert abs(float(log_transform(999)) - 6.9077553) < 5e-7

    def test_returns_float32(self):
        out = log_transform(np.array([0, 1, 999], dtype=np.int32))
        assert out.dtype == np.float32

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=200)
    def test_matches_oracle_everywhere(self, x):
        assert log_transform(x) == f32_log1p(x)

    @given(st.lists(st.integers(min_value=0, max_value=2**31 - 1),
                    min_size=2, max_size=50))
    def test_monotone_nondecreasing(self, xs):
        xs = sorted(xs)
        out = log_transform(np.array(xs, dtype=np.int64))
        assert np.all(np.diff(out) >= 0)
        assert np.all(np.isfinite(out))


class TestDenseTransform:
    def test_pinned_values(self):
        assert dense_transform(-3, apply_log=True) == np.float32(0.0)
        assert dense_transform(1, apply_log=False) == np.float32(1.0)
        assert dense_transform(1, apply_log=True) == f32_log1p(1)

    def test_composition_law(self):
        arr = np.array([-9, -1, 0, 1, 5, 2**31 - 1], dtype=np.int32)
        with_log = dense_transform(arr, apply_log=True)
        without = dense_transform(arr, apply_log=False)
        assert np.array_equal(with_log, log_transform(negatives_to_zero(arr)))
        assert np.array_equal(without,
                              negatives_to_zero(arr).astype(np.float32))


class TestModulusReduce:
    def test_pinned_values(self):
        assert modulus_reduce(0x1A2B3C4D, 5000) == 439041101 % 5000 == 1101
        assert modulus_reduce(42, 1) == 0
        assert modulus_reduce(4999, 5000) == 4999

    def test_array_dtype(self):
        arr = np.array([0, 1, UINT32_MAX], dtype=np.uint32)
        out = modulus_reduce(arr, 5000)
        assert out.dtype == np.uint32
        assert out.tolist() == [0, 1, UINT32_MAX % 5000]

    @given(st.integers(min_value=0, max_value=UINT32_MAX),
           st.integers(min_value=1, max_value=UINT32_MAX))
    @settings(max_examples=300)
    def test_matches_integer_arithmetic(self, v, m):
        r = int(modulus_reduce(v, m))
        assert r == v % m
        assert 0 <= r < m

    def test_batch_against_python_ints(self):
        rng = np.random.default_rng(3)
        vals = rng.integers(0, 2**32, 10_000, dtype=np.uint64).astype(np.uint32)
        for m in (1, 2, 5000, 1_000_000, 2**32 - 1):
            out = modulus_reduce(vals, m)
            want = [int(v) % m for v in vals.tolist()]
            assert out.tolist() == want


def test_log_transform_float32_rounding_is_single_step():
    # the contract: compute in float64, round once to float32; double rounding
    # through an intermediate float32 would diverge on values like these
    for x in (3, 10, 12345, 999_999_937):
        assert log_transform(x) == np.float32(math.log1p(x))
