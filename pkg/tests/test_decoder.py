"""Decoder tests: plain-Python parsing as the oracle, both kernels under test.

Valid-input expectations come from int() / int(_, 16) on split fields; error
positions are hand-placed.  Every behavior is checked for the scalar kernel,
the 4-byte-group kernel, and arbitrary chunkings of the same stream.
"""

import random

import numpy as np
import pytest

from conftest import N_COLUMNS, N_DENSE, N_SPARSE, TOY_TEXT, make_row, oracle_parse
from tabprep.decoder import StreamDecoder, decode_buffer, decode_file, iter_decode_file
from tabprep.errors import ArityError, FieldOverflow, InvalidByte

WIDTHS = (1, 4)


def build_corpus(n_rows, seed, max_width=8):
    """Valid rows with field widths 0..max_width and random dense signs."""
    rng = random.Random(seed)
    rows = []
    for _ in range(n_rows):
        label = str(rng.randrange(0, 100)) if rng.random() < 0.9 else "0"
        dense = []
        for _ in range(N_DENSE):
            w = rng.randrange(0, max_width + 1)
            if w == 0:
                dense.append("")
                continue
            digits = "".join(rng.choice("0123456789") for _ in range(w))
            sign = "-" if rng.random() < 0.3 else ""
            dense.append(sign + digits)
        sparse = []
        for _ in range(N_SPARSE):
            w = rng.randrange(0, max_width + 1)
            sparse.append("".join(rng.choice("0123456789abcdef") for _ in range(w)))
        rows.append(make_row(label, dense, sparse))
    return "".join(rows).encode("ascii")


def check_against_oracle(text, group_width):
    batch = decode_buffer(text, group_width=group_width)
    labels, dense, sparse = oracle_parse(text)
    assert batch.labels.tolist() == labels
    assert batch.dense.tolist() == dense
    assert batch.sparse.tolist() == [[v for v in row] for row in sparse]
    return batch


@pytest.mark.parametrize("width", WIDTHS)
class TestValidRows:
    def test_single_pinned_row(self, width):
        # label 0, dense[0]=1, dense[1]=-5, sparse[11]=0x68ab
        row = make_row("0",
                       ["1", "-5"] + [""] * 11,
                       [""] * 11 + ["68ab"] + [""] * 14)
        batch = decode_buffer(row.encode(), group_width=width)
        assert len(batch) == 1
        assert batch.labels[0] == 0
        assert batch.dense[0, 0] == 1
        assert batch.dense[0, 1] == -5
        assert batch.sparse[0, 11] == 0x68AB

    def test_all_empty_fields_give_zero_record(self, width):
        text = ("\t" * (N_COLUMNS - 1) + "\n").encode()
        batch = decode_buffer(text, group_width=width)
        assert len(batch) == 1
        assert batch.labels[0] == 0
        assert not batch.dense.any()
        assert not batch.sparse.any()

    def test_toy_dataset(self, width):
        check_against_oracle(TOY_TEXT, width)

    def test_int32_boundaries(self, width):
        row = make_row("2147483647",
                       ["2147483647", "-2147483647"] + [""] * 11,
                       ["ffffffff", "0", "00000000"] + [""] * 23)
        batch = decode_buffer(row.encode(), group_width=width)
        assert batch.labels[0] == 2**31 - 1
        assert batch.dense[0].tolist()[:2] == [2**31 - 1, -(2**31 - 1)]
        assert batch.sparse[0, 0] == 2**32 - 1
        assert batch.sparse[0, 2] == 0

    def test_leading_zeros(self, width):
        row = make_row("007", ["00000012"] + [""] * 12, ["000000ab"] + [""] * 25)
        batch = decode_buffer(row.encode(), group_width=width)
        assert batch.labels[0] == 7
        assert batch.dense[0, 0] == 12
        assert batch.sparse[0, 0] == 0xAB

    def test_empty_input(self, width):
        assert len(decode_buffer(b"", group_width=width)) == 0

    def test_missing_final_newline(self, width):
        text = TOY_TEXT.rstrip(b"\n")
        check_against_oracle(text + b"\n", width)
        batch = decode_buffer(text, group_width=width)
        assert len(batch) == 4

    def test_field_width_sweep(self, width):
        # widths 0..8 with drifting alignment: every delimiter position
        # within a 4-byte group occurs many times across this corpus
        text = build_corpus(300, seed=width)
        check_against_oracle(text, width)


@pytest.mark.parametrize("width", WIDTHS)
class TestErrors:
    def test_row_with_39_fields(self, width):
        text = ("1" + "\t" * (N_COLUMNS - 2) + "\n").encode()
        with pytest.raises(ArityError) as err:
            decode_buffer(text, group_width=width)
        assert err.value.row == 0

    def test_row_with_41_fields(self, width):
        text = ("1" + "\t" * N_COLUMNS + "\n").encode()
        with pytest.raises(ArityError):
            decode_buffer(text, group_width=width)

    def test_invalid_byte_position(self, width):
        # 'x' lands in dense column 1 of row 1
        good = make_row("0", ["1"] + [""] * 12, [""] * 26)
        bad = make_row("1", ["4x2"] + [""] * 12, [""] * 26)
        with pytest.raises(InvalidByte) as err:
            decode_buffer((good + bad).encode(), group_width=width)
        assert (err.value.row, err.value.col, err.value.byte) == (1, 1, ord("x"))

    def test_hex_letters_invalid_in_dense(self, width):
        text = make_row("0", ["1a"] + [""] * 12, [""] * 26).encode()
        with pytest.raises(InvalidByte) as err:
            decode_buffer(text, group_width=width)
        assert err.value.col == 1 and err.value.byte == ord("a")

    def test_uppercase_hex_invalid(self, width):
        text = make_row("0", [""] * 13, ["AB"] + [""] * 25).encode()
        with pytest.raises(InvalidByte) as err:
            decode_buffer(text, group_width=width)
        assert err.value.col == 14 and err.value.byte == ord("A")

    def test_label_is_unsigned(self, width):
        text = make_row("-1", [""] * 13, [""] * 26).encode()
        with pytest.raises(InvalidByte) as err:
            decode_buffer(text, group_width=width)
        assert err.value.col == 0 and err.value.byte == ord("-")

    def test_minus_only_leads_dense_fields(self, width):
        text = make_row("0", ["1-2"] + [""] * 12, [""] * 26).encode()
        with pytest.raises(InvalidByte) as err:
            decode_buffer(text, group_width=width)
        assert err.value.col == 1

    def test_minus_invalid_in_sparse(self, width):
        text = make_row("0", [""] * 13, [""] * 25 + ["-1"]).encode()
        with pytest.raises(InvalidByte) as err:
            decode_buffer(text, group_width=width)
        assert err.value.col == 39 and err.value.byte == ord("-")

    def test_dense_overflow_by_value(self, width):
        for field in ("2147483648", "-2147483648", "99999999999"):
            text = make_row("0", [field] + [""] * 12, [""] * 26).encode()
            with pytest.raises(FieldOverflow) as err:
                decode_buffer(text, group_width=width)
            assert (err.value.row, err.value.col) == (0, 1)

    def test_label_overflow(self, width):
        text = make_row("2147483648", [""] * 13, [""] * 26).encode()
        with pytest.raises(FieldOverflow) as err:
            decode_buffer(text, group_width=width)
        assert err.value.col == 0

    def test_sparse_overflow_by_digit_count(self, width):
        # nine digits overflow even when the value fits 32 bits
        text = make_row("0", [""] * 13, ["000000001"] + [""] * 25).encode()
        with pytest.raises(FieldOverflow) as err:
            decode_buffer(text, group_width=width)
        assert (err.value.row, err.value.col) == (0, 14)
        ok = make_row("0", [""] * 13, ["00000001"] + [""] * 25).encode()
        assert decode_buffer(ok, group_width=width).sparse[0, 0] == 1

    def test_truncated_final_row(self, width):
        text = TOY_TEXT + b"1\t2\t3"
        with pytest.raises(ArityError) as err:
            decode_buffer(text, group_width=width)
        assert err.value.row == 4

    def test_carriage_return_is_invalid(self, width):
        text = ("0" + "\t" * 39 + "\r\n").encode()
        with pytest.raises(InvalidByte) as err:
            decode_buffer(text, group_width=width)
        assert err.value.byte == 0x0D


class TestKernelEquivalence:
    def test_output_equivalence_on_fuzz(self):
        text = build_corpus(500, seed=99)
        a = decode_buffer(text, group_width=1)
        b = decode_buffer(text, group_width=4)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.dense, b.dense)
        assert np.array_equal(a.sparse, b.sparse)

    def test_error_equivalence_on_corruptions(self):
        base = build_corpus(40, seed=5)
        rng = random.Random(17)
        for _ in range(120):
            buf = bytearray(base)
            pos = rng.randrange(len(buf))
            buf[pos] = rng.choice(b"gGZ@.#\x00\xff -")
            results = []
            for width in WIDTHS:
                try:
                    decode_buffer(bytes(buf), group_width=width)
                    results.append(None)
                except (InvalidByte, FieldOverflow, ArityError) as exc:
                    results.append((type(exc).__name__, exc.row,
                                    getattr(exc, "col", -1),
                                    getattr(exc, "byte", -1)))
            assert results[0] == results[1], f"corruption at byte {pos}"


class TestChunking:
    def test_every_split_point_of_toy(self):
        whole = decode_buffer(TOY_TEXT, group_width=4)
        for cut in range(len(TOY_TEXT) + 1):
            dec = StreamDecoder(group_width=4)
            parts = [dec.feed(TOY_TEXT[:cut]), dec.feed(TOY_TEXT[cut:]), dec.finish()]
            labels = np.concatenate([p.labels for p in parts])
            dense = np.concatenate([p.dense for p in parts])
            sparse = np.concatenate([p.sparse for p in parts])
            assert np.array_equal(labels, whole.labels), f"cut at {cut}"
            assert np.array_equal(dense, whole.dense)
            assert np.array_equal(sparse, whole.sparse)

    @pytest.mark.parametrize("width", WIDTHS)
    @pytest.mark.parametrize("chunk", [1, 2, 3, 5, 7, 64])
    def test_fixed_size_chunks(self, width, chunk):
        text = build_corpus(50, seed=chunk)
        whole = decode_buffer(text, group_width=width)
        dec = StreamDecoder(group_width=width)
        parts = [dec.feed(text[i:i + chunk]) for i in range(0, len(text), chunk)]
        parts.append(dec.finish())
        assert np.concatenate([p.labels for p in parts]).tolist() == whole.labels.tolist()
        assert np.vstack([p.dense for p in parts]).tolist() == whole.dense.tolist()
        assert np.vstack([p.sparse for p in parts]).tolist() == whole.sparse.tolist()

    def test_chunked_error_positions_match(self):
        bad = make_row("1", ["9z"] + [""] * 12, [""] * 26).encode()
        text = TOY_TEXT + bad
        for chunk in (1, 3, 4, 11):
            dec = StreamDecoder(group_width=4)
            with pytest.raises(InvalidByte) as err:
                for i in range(0, len(text), chunk):
                    dec.feed(text[i:i + chunk])
                dec.finish()
            assert (err.value.row, err.value.col, err.value.byte) == (4, 1, ord("z"))

    def test_feed_after_error_reraises(self):
        dec = StreamDecoder(group_width=4)
        with pytest.raises(InvalidByte):
            dec.feed(b"zzzz")
        with pytest.raises(InvalidByte):
            dec.feed(b"0\t\n")
        with pytest.raises(InvalidByte):
            dec.finish()

    def test_feed_after_finish_rejected(self):
        dec = StreamDecoder(group_width=4)
        dec.feed(TOY_TEXT)
        dec.finish()
        with pytest.raises(RuntimeError):
            dec.feed(b"")
        with pytest.raises(RuntimeError):
            dec.finish()

    def test_rows_decoded_counter(self):
        dec = StreamDecoder(group_width=4)
        dec.feed(TOY_TEXT)
        dec.finish()
        assert dec.rows_decoded == 4


class TestFileHelpers:
    def test_decode_file_matches_buffer(self, tmp_path):
        text = build_corpus(200, seed=1)
        path = tmp_path / "data.txt"
        path.write_bytes(text)
        whole = decode_buffer(text)
        from_file = decode_file(path)
        assert from_file.labels.tolist() == whole.labels.tolist()
        assert from_file.dense.tolist() == whole.dense.tolist()
        assert from_file.sparse.tolist() == whole.sparse.tolist()

    def test_iter_decode_file_small_chunks(self, tmp_path):
        text = build_corpus(80, seed=2)
        path = tmp_path / "data.txt"
        path.write_bytes(text)
        whole = decode_buffer(text)
        batches = list(iter_decode_file(path, chunk_bytes=193))
        assert sum(len(b) for b in batches) == len(whole)
        assert np.concatenate([b.labels for b in batches]).tolist() == whole.labels.tolist()

    def test_invalid_group_width(self):
        with pytest.raises(ValueError):
            StreamDecoder(group_width=3)
