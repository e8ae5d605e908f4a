"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class TabprepError(Exception):
    """Base class for all package errors."""


class ConfigError(TabprepError, ValueError):
    """A pipeline configuration field violates its invariant."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DecodeError(TabprepError, ValueError):
    """Base class for errors raised while decoding raw text input."""

    row: int


class InvalidByte(DecodeError):
    """A byte outside the legal alphabet for its column position."""

    def __init__(self, row: int, col: int, byte: int):
        self.row = row
        self.col = col
        self.byte = byte
        super().__init__(f"row {row}, column {col}: invalid byte 0x{byte:02x}")


class FieldOverflow(DecodeError):
    """A dense value exceeding 31-bit magnitude or a sparse field wider than 8 hex digits."""

    def __init__(self, row: int, col: int):
        self.row = row
        self.col = col
        super().__init__(f"row {row}, column {col}: field overflows 32-bit storage")


class ArityError(DecodeError):
    """A row with a field count other than 40."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row}: row does not have exactly 40 fields")


class VocabError(TabprepError):
    """Base class for vocabulary table errors."""


class OutOfRangeValue(VocabError, ValueError):
    """A value at or above the table modulus reached a vocabulary operation."""

    def __init__(self, value: int, modulus: int):
        self.value = value
        self.modulus = modulus
        super().__init__(f"value {value} out of range for modulus {modulus}")


class MissingEntry(VocabError, KeyError):
    """Pass-2 lookup of a value never observed in pass 1."""

    def __init__(self, value: int):
        self.value = value
        super().__init__(f"value {value} has no vocabulary entry")

    def __str__(self) -> str:  # KeyError quotes its payload by default
        return f"value {self.value} has no vocabulary entry"


class DuplicateWithinPart(VocabError, ValueError):
    """A sub-vocabulary contains the same value twice (corrupt part)."""

    def __init__(self, chunk_index: int):
        self.chunk_index = chunk_index
        super().__init__(f"sub-vocabulary for chunk {chunk_index} has duplicate values")


class FormatError(TabprepError, ValueError):
    """Base class for binary dataset file errors."""


class BadMagic(FormatError):
    def __init__(self, found: bytes, expected: bytes = b"PBIN"):
        self.found = found
        self.expected = expected
        super().__init__(f"bad magic {found!r}, expected {expected!r}")


class VersionMismatch(FormatError):
    def __init__(self, found: int, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(f"unsupported format version {found}, expected {expected}")


class ShortRead(FormatError):
    """The byte stream ended in the middle of a fixed-width record."""

    def __init__(self, record_index: int):
        self.record_index = record_index
        super().__init__(f"stream truncated inside record {record_index}")


class RowCountMismatch(FormatError):
    def __init__(self, declared: int, actual: int):
        self.declared = declared
        self.actual = actual
        super().__init__(f"header declares {declared} rows but file holds {actual}")


class ProtocolError(TabprepError):
    """Violation of the streaming wire protocol."""


class ServerError(TabprepError):
    """An ERROR frame received from the preprocessing server."""

    def __init__(self, code: int, code_name: str, row: int, message: str):
        self.code = code
        self.code_name = code_name
        self.row = row
        super().__init__(f"server error {code_name} (row {row}): {message}")
