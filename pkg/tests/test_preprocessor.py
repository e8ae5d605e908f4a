"""Estimator facade tests: sklearn contract plus transform semantics."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tabprep import io_formats
from tabprep.decoder import decode_buffer
from tabprep.errors import MissingEntry
from tabprep.preprocessor import TabularPreprocessor
from tabprep.reference import parse_rows, reference_pipeline

from conftest import TOY_ROWS, TOY_TEXT


def toy_matrix(modulus=5000, apply_log=True):
    """Expected (4, 40) float32 matrix from the reference pipeline."""
    out, _ = reference_pipeline(parse_rows(TOY_TEXT), modulus, apply_log=apply_log)
    mat = np.empty((len(out), 40), dtype=np.float32)
    mat[:, 0] = out.labels
    mat[:, 1:14] = out.dense
    mat[:, 14:] = out.sparse
    return mat


class TestSklearnContract:
    def test_get_set_params_roundtrip(self):
        pre = TabularPreprocessor(modulus=77, apply_log=False, decode_group_width=1)
        params = pre.get_params()
        assert params == {"modulus": 77, "apply_log": False,
                          "decode_group_width": 1}
        other = TabularPreprocessor().set_params(**params)
        assert other.get_params() == params

    def test_clone_drops_fitted_state(self):
        pre = TabularPreprocessor().fit(TOY_TEXT)
        assert hasattr(pre, "vocabulary_")
        fresh = clone(pre)
        assert not hasattr(fresh, "vocabulary_")
        assert fresh.get_params() == pre.get_params()

    def test_fit_returns_self(self):
        pre = TabularPreprocessor()
        assert pre.fit(TOY_TEXT) is pre

    def test_transform_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            TabularPreprocessor().transform(TOY_TEXT)

    def test_fit_transform(self):
        got = TabularPreprocessor().fit_transform(TOY_TEXT)
        assert got.dtype == np.float32
        assert got.shape == (4, 40)
        np.testing.assert_array_equal(got, toy_matrix())

    def test_feature_names(self):
        names = TabularPreprocessor().get_feature_names_out()
        assert names.shape == (40,)
        assert names[0] == "label"
        assert names[1] == "dense_0"
        assert names[14] == "sparse_0"
        assert names[39] == "sparse_25"

    def test_invalid_params_rejected_at_fit(self):
        with pytest.raises(ValueError, match="modulus"):
            TabularPreprocessor(modulus=0).fit(TOY_TEXT)
        with pytest.raises(ValueError, match="group_width"):
            TabularPreprocessor(decode_group_width=3).fit(TOY_TEXT)


class TestTransformSemantics:
    @pytest.mark.parametrize("modulus", [5000, 1_000_000])
    def test_matches_reference(self, modulus):
        got = TabularPreprocessor(modulus=modulus).fit(TOY_TEXT).transform(TOY_TEXT)
        want = toy_matrix(modulus)
        assert np.array_equal(got.view(np.uint32), want.view(np.uint32))

    def test_apply_log_false(self):
        got = TabularPreprocessor(apply_log=False).fit_transform(TOY_TEXT)
        np.testing.assert_array_equal(got, toy_matrix(apply_log=False))
        assert got[0, 1] == 3.0  # dense column 0 value "3", no log

    def test_unseen_residue_raises(self):
        pre = TabularPreprocessor().fit(TOY_TEXT)
        # Sparse value absent from the toy data.
        row = "\t".join(["0"] + ["1"] * 13 + ["abcd"] * 26) + "\n"
        with pytest.raises(MissingEntry):
            pre.transform(row.encode())

    def test_partial_fit_preserves_ids(self):
        pre = TabularPreprocessor()
        pre.partial_fit(TOY_ROWS[0].encode())
        first = pre.transform(TOY_ROWS[0].encode())
        pre.partial_fit(TOY_TEXT)
        # Ids assigned in the first call survive the second, and the final
        # state matches fitting on all rows at once (row 0 leads both).
        np.testing.assert_array_equal(pre.transform(TOY_ROWS[0].encode()), first)
        np.testing.assert_array_equal(pre.transform(TOY_TEXT), toy_matrix())
        assert pre.n_rows_fit_ == 5

    def test_partial_fit_without_fit_initializes(self):
        pre = TabularPreprocessor()
        assert pre.partial_fit(TOY_TEXT) is pre
        assert pre.n_rows_fit_ == 4

    def test_vocab_sizes_attribute(self):
        pre = TabularPreprocessor().fit(TOY_TEXT)
        assert len(pre.vocab_sizes_) == 26
        assert pre.vocab_sizes_[0] == 3  # a, b, missing
        assert pre.vocabulary_.sizes() == pre.vocab_sizes_


class TestInputCoercion:
    def test_bytes_path_and_batch_agree(self, tmp_path):
        path = tmp_path / "toy.txt"
        path.write_bytes(TOY_TEXT)
        batch = decode_buffer(TOY_TEXT)
        pre = TabularPreprocessor().fit(TOY_TEXT)
        from_bytes = pre.transform(TOY_TEXT)
        from_path = pre.transform(path)
        from_str_path = pre.transform(str(path))
        from_batch = pre.transform(batch)
        np.testing.assert_array_equal(from_bytes, from_path)
        np.testing.assert_array_equal(from_bytes, from_str_path)
        np.testing.assert_array_equal(from_bytes, from_batch)

    def test_binary_record_file(self, tmp_path):
        path = tmp_path / "toy.pbin"
        io_formats.write_records(path, decode_buffer(TOY_TEXT))
        got = TabularPreprocessor().fit(path).transform(path)
        np.testing.assert_array_equal(got, toy_matrix())

    def test_transformed_record_file_rejected(self, tmp_path):
        out = tmp_path / "toy-out.pbin"
        pre = TabularPreprocessor().fit(TOY_TEXT)
        transformed, _ = reference_pipeline(parse_rows(TOY_TEXT), 5000)
        io_formats.write_records(out, transformed)
        with pytest.raises(TypeError, match="transformed"):
            pre.transform(out)

    def test_ndarray_input(self):
        batch = decode_buffer(TOY_TEXT)
        mat = np.empty((4, 40), dtype=np.int64)
        mat[:, 0] = batch.labels
        mat[:, 1:14] = batch.dense
        mat[:, 14:] = batch.sparse
        got = TabularPreprocessor().fit(mat).transform(mat)
        np.testing.assert_array_equal(got, toy_matrix())

    def test_record_list_input(self):
        records = list(decode_buffer(TOY_TEXT).to_records())
        got = TabularPreprocessor().fit(records).transform(records)
        np.testing.assert_array_equal(got, toy_matrix())

    def test_memoryview_and_bytearray(self):
        pre = TabularPreprocessor().fit(memoryview(TOY_TEXT))
        got = pre.transform(bytearray(TOY_TEXT))
        np.testing.assert_array_equal(got, toy_matrix())

    def test_unsupported_type(self):
        with pytest.raises(TypeError, match="cannot interpret"):
            TabularPreprocessor().fit(3.14)

    def test_group_width_1_matches_4(self):
        a = TabularPreprocessor(decode_group_width=1).fit_transform(TOY_TEXT)
        b = TabularPreprocessor(decode_group_width=4).fit_transform(TOY_TEXT)
        np.testing.assert_array_equal(a, b)
