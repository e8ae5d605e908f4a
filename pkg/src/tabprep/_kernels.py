"""Compiled byte-level decode kernels.

Two interchangeable decoders over the same transition state:

* decode_scalar walks one byte at a time.
* decode_group4 walks four bytes at a time, classifying the group by a
  4-bit delimiter mask (MSB = first byte) and dispatching to one of 16
  straight-line bodies.

Both mutate an int64 state vector so a stream can be decoded in chunks of
any size with identical results, including error positions.  The fixed
column layout (label, 13 dense, 26 sparse) is baked in: the accumulator
multiplies by 10 on decimal columns and shifts by 4 on hex columns.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# state vector slots
S_V = 0       # field accumulator
S_NEG = 1     # minus sign seen in current field
S_COL = 2     # current column, 0..39
S_ROW = 3     # absolute row index of the row in progress
S_FLEN = 4    # bytes consumed in current field
S_DIGS = 5    # digit bytes consumed in current field
S_OUT = 6     # rows completed in the current kernel call
S_ERR = 7     # status code, 0 while healthy
S_EROW = 8
S_ECOL = 9
S_EBYTE = 10
NSTATE = 11

# status codes
ST_OK = 0
ST_INVALID = 1
ST_OVERFLOW = 2
ST_ARITY = 3

# byte classes
CB_INVALID = 0
CB_TAB = 1
CB_NL = 2
CB_MINUS = 3
CB_DIGIT = 4
CB_HEX = 5

N_DENSE = 13
N_SPARSE = 26
LAST_COL = 39
MAX_HEX_DIGITS = 8
INT32_MAX = 2147483647


def _build_tables():
    cls = np.zeros(256, dtype=np.uint8)
    val = np.zeros(256, dtype=np.int64)
    cls[0x09] = CB_TAB
    cls[0x0A] = CB_NL
    cls[0x2D] = CB_MINUS
    for b in range(0x30, 0x3A):
        cls[b] = CB_DIGIT
        val[b] = b - 0x30
    for b in range(0x61, 0x67):
        cls[b] = CB_HEX
        val[b] = b - 0x61 + 10
    return cls, val


BYTE_CLASS, BYTE_VALUE = _build_tables()


@njit(cache=True, nogil=True)
def _fail(st, code, col, byte):
    st[S_ERR] = code
    st[S_EROW] = st[S_ROW]
    st[S_ECOL] = col
    st[S_EBYTE] = byte
    return code


@njit(cache=True, nogil=True)
def _acc(st, b):
    """Fold one data byte into the field accumulator."""
    cls = BYTE_CLASS[b]
    col = st[S_COL]
    if cls == CB_DIGIT:
        if col > N_DENSE:  # hex column: digit contributes its nibble
            st[S_V] = (st[S_V] << 4) | BYTE_VALUE[b]
            st[S_DIGS] += 1
            st[S_FLEN] += 1
            if st[S_DIGS] > MAX_HEX_DIGITS:
                return _fail(st, ST_OVERFLOW, col, b)
        else:
            st[S_V] = st[S_V] * 10 + BYTE_VALUE[b]
            st[S_DIGS] += 1
            st[S_FLEN] += 1
            if st[S_V] > INT32_MAX:
                return _fail(st, ST_OVERFLOW, col, b)
        return 0
    if cls == CB_HEX:
        if col <= N_DENSE:
            return _fail(st, ST_INVALID, col, b)
        st[S_V] = (st[S_V] << 4) | BYTE_VALUE[b]
        st[S_DIGS] += 1
        st[S_FLEN] += 1
        if st[S_DIGS] > MAX_HEX_DIGITS:
            return _fail(st, ST_OVERFLOW, col, b)
        return 0
    if cls == CB_MINUS:
        # sign is only legal as the first byte of a dense field
        if col == 0 or col > N_DENSE or st[S_FLEN] != 0:
            return _fail(st, ST_INVALID, col, b)
        st[S_NEG] = 1
        st[S_FLEN] += 1
        return 0
    return _fail(st, ST_INVALID, col, b)


@njit(cache=True, nogil=True)
def _emit(st, labels, dense, sparse):
    """Close the current field into the output slab and reset field state."""
    col = st[S_COL]
    out = st[S_OUT]
    v = st[S_V]
    if st[S_NEG] == 1:
        v = -v
    if col == 0:
        labels[out] = v
    elif col <= N_DENSE:
        dense[out, col - 1] = v
    else:
        sparse[out, col - 1 - N_DENSE] = v
    st[S_V] = 0
    st[S_NEG] = 0
    st[S_FLEN] = 0
    st[S_DIGS] = 0


@njit(cache=True, nogil=True)
def _delim(st, b, labels, dense, sparse):
    """Handle a tab or newline byte."""
    col = st[S_COL]
    if BYTE_CLASS[b] == CB_TAB:
        if col >= LAST_COL:
            return _fail(st, ST_ARITY, col, b)
        _emit(st, labels, dense, sparse)
        st[S_COL] = col + 1
        return 0
    if col != LAST_COL:
        return _fail(st, ST_ARITY, col, b)
    _emit(st, labels, dense, sparse)
    st[S_COL] = 0
    st[S_ROW] += 1
    st[S_OUT] += 1
    return 0


@njit(cache=True, nogil=True)
def _step(st, b, labels, dense, sparse):
    cls = BYTE_CLASS[b]
    if cls == CB_TAB or cls == CB_NL:
        return _delim(st, b, labels, dense, sparse)
    return _acc(st, b)


@njit(cache=True, nogil=True)
def decode_scalar(buf, st, labels, dense, sparse):
    """Byte-at-a-time decoder.  Returns the status code (0 on success)."""
    for i in range(buf.shape[0]):
        if _step(st, buf[i], labels, dense, sparse) != 0:
            return st[S_ERR]
    return ST_OK


@njit(cache=True, nogil=True)
def decode_group4(buf, st, labels, dense, sparse):
    """Four-byte-group decoder.  Returns the status code (0 on success).

    Each full group is reduced to a delimiter mask m (bit 3 for the first
    byte, bit 0 for the last) and handled by the matching one of 16 bodies.
    The accumulator carries across groups through the state vector, so any
    prefix of the stream may end mid-field.  A trailing partial group is
    stepped byte by byte.
    """
    n = buf.shape[0]
    n4 = (n // 4) * 4
    i = 0
    while i < n4:
        b0 = buf[i]
        b1 = buf[i + 1]
        b2 = buf[i + 2]
        b3 = buf[i + 3]
        m = 0
        c = BYTE_CLASS[b0]
        if c == CB_TAB or c == CB_NL:
            m |= 8
        c = BYTE_CLASS[b1]
        if c == CB_TAB or c == CB_NL:
            m |= 4
        c = BYTE_CLASS[b2]
        if c == CB_TAB or c == CB_NL:
            m |= 2
        c = BYTE_CLASS[b3]
        if c == CB_TAB or c == CB_NL:
            m |= 1
        if m == 0b0000:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        elif m == 0b0001:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        elif m == 0b0010:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        elif m == 0b0011:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        elif m == 0b0100:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        elif m == 0b0101:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        elif m == 0b0110:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        elif m == 0b0111:
            if _acc(st, b0) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        elif m == 0b1000:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        elif m == 0b1001:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        elif m == 0b1010:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        elif m == 0b1011:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b1) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        elif m == 0b1100:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        elif m == 0b1101:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b2) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        elif m == 0b1110:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _acc(st, b3) != 0:
                return st[S_ERR]
        else:
            if _delim(st, b0, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b1, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b2, labels, dense, sparse) != 0:
                return st[S_ERR]
            if _delim(st, b3, labels, dense, sparse) != 0:
                return st[S_ERR]
        i += 4
    for j in range(n4, n):
        if _step(st, buf[j], labels, dense, sparse) != 0:
            return st[S_ERR]
    return ST_OK
