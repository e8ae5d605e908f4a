"""Stateful vocabulary tables: the only stateful operator in the pipeline.

Pass 1 observes every sparse residue and assigns dense ids in order of first
appearance.  Pass 2 looks residues up and fails loudly on anything unseen.
A table covers the domain [0, modulus); ids are a contiguous bijection onto
[0, size) at all times.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DuplicateWithinPart, MissingEntry, OutOfRangeValue, VocabError

N_SPARSE = 26


def first_appearance_unique(values) -> np.ndarray:
    """Distinct values of a 1-d array, ordered by first occurrence."""
    vals = np.asarray(values).ravel()
    uniq, first_pos = np.unique(vals, return_index=True)
    return uniq[np.argsort(first_pos, kind="stable")]


class VocabTable:
    """Appearance-ordered id assignment over a bounded integer domain.

    Storage is a dense int64 array indexed by value: -1 marks absent, any
    other entry is the assigned id.  next_id doubles as the table size.
    """

    __slots__ = ("modulus", "_ids", "_next_id")

    def __init__(self, modulus: int):
        if modulus < 1:
            raise ValueError("modulus must be >= 1")
        self.modulus = int(modulus)
        self._ids = np.full(self.modulus, -1, dtype=np.int64)
        self._next_id = 0

    # -- pass 1 -------------------------------------------------------------

    def observe(self, value: int) -> int:
        """Record one residue; return its id (new or existing)."""
        value = int(value)
        if not 0 <= value < self.modulus:
            raise OutOfRangeValue(value, self.modulus)
        assigned = self._ids[value]
        if assigned < 0:
            assigned = self._next_id
            self._ids[value] = assigned
            self._next_id += 1
        return int(assigned)

    def observe_batch(self, values) -> int:
        """Record a batch of residues; return the number of new entries.

        Equivalent to calling observe() left to right: new values receive
        consecutive ids in order of first appearance within the batch.
        """
        vals = np.asarray(values, dtype=np.int64).ravel()
        if vals.size == 0:
            return 0
        if vals.min() < 0 or vals.max() >= self.modulus:
            bad = vals[(vals < 0) | (vals >= self.modulus)][0]
            raise OutOfRangeValue(int(bad), self.modulus)
        uniq = first_appearance_unique(vals)
        fresh = uniq[self._ids[uniq] < 0]
        self._ids[fresh] = np.arange(self._next_id, self._next_id + fresh.size, dtype=np.int64)
        self._next_id += int(fresh.size)
        return int(fresh.size)

    # -- pass 2 -------------------------------------------------------------

    def lookup(self, value: int) -> int:
        """Return the id assigned to value; raise MissingEntry if never observed."""
        value = int(value)
        if not 0 <= value < self.modulus:
            raise OutOfRangeValue(value, self.modulus)
        assigned = self._ids[value]
        if assigned < 0:
            raise MissingEntry(value)
        return int(assigned)

    def lookup_batch(self, values) -> np.ndarray:
        """Vectorized lookup; raises on the first unseen or out-of-range value."""
        vals = np.asarray(values, dtype=np.int64).ravel()
        if vals.size == 0:
            return np.empty(0, dtype=np.uint32)
        if vals.min() < 0 or vals.max() >= self.modulus:
            bad = vals[(vals < 0) | (vals >= self.modulus)][0]
            raise OutOfRangeValue(int(bad), self.modulus)
        ids = self._ids[vals]
        if ids.min() < 0:
            missing = vals[ids < 0][0]
            raise MissingEntry(int(missing))
        return ids.astype(np.uint32)

    # -- inspection ---------------------------------------------------------

    def __len__(self) -> int:
        return self._next_id

    @property
    def nbytes(self) -> int:
        """Bytes held by the id array; the footprint is O(modulus), not O(rows)."""
        return int(self._ids.nbytes)

    def __contains__(self, value) -> bool:
        value = int(value)
        return 0 <= value < self.modulus and self._ids[value] >= 0

    def values_in_id_order(self) -> np.ndarray:
        """Observed residues as uint32, ordered by assigned id."""
        present = np.flatnonzero(self._ids >= 0)
        return present[np.argsort(self._ids[present])].astype(np.uint32)

    def items(self) -> Iterator[tuple[int, int]]:
        """(value, id) pairs in id order."""
        for value in self.values_in_id_order():
            yield int(value), int(self._ids[value])

    def as_dict(self) -> dict[int, int]:
        return dict(self.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, VocabTable):
            return NotImplemented
        return self.modulus == other.modulus and np.array_equal(self._ids, other._ids)

    def __repr__(self) -> str:
        return f"VocabTable(modulus={self.modulus}, size={len(self)})"

    # -- construction -------------------------------------------------------

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], modulus: int) -> "VocabTable":
        """Rebuild a table from (value, id) pairs; ids must be 0..k-1 exactly."""
        table = cls(modulus)
        seen = {}
        for value, assigned in pairs:
            value, assigned = int(value), int(assigned)
            if not 0 <= value < modulus:
                raise OutOfRangeValue(value, modulus)
            if value in seen or table._ids[value] >= 0:
                raise VocabError(f"value {value} listed twice")
            seen[value] = assigned
            table._ids[value] = assigned
        ids = sorted(seen.values())
        if ids != list(range(len(ids))):
            raise VocabError("ids are not a contiguous 0..k-1 range")
        table._next_id = len(ids)
        return table

    @classmethod
    def merge_parts(cls, parts: Sequence[Sequence[int]], modulus: int) -> "VocabTable":
        """Merge per-chunk sub-vocabularies, honoring chunk order.

        Each part lists the distinct residues of one chunk in first-appearance
        order.  The merged table assigns ids as if the chunks had been observed
        back to back.  A part with internal duplicates is a broken invariant.
        """
        table = cls(modulus)
        for chunk_index, part in enumerate(parts):
            arr = np.asarray(part, dtype=np.int64).ravel()
            if np.unique(arr).size != arr.size:
                raise DuplicateWithinPart(chunk_index)
            table.observe_batch(arr)
        return table


class Vocabulary:
    """The 26 per-column tables built during pass 1, as one unit."""

    __slots__ = ("modulus", "tables")

    def __init__(self, modulus: int, tables: Sequence[VocabTable] | None = None):
        self.modulus = int(modulus)
        if tables is None:
            tables = [VocabTable(modulus) for _ in range(N_SPARSE)]
        if len(tables) != N_SPARSE:
            raise ValueError(f"expected {N_SPARSE} tables, got {len(tables)}")
        for t in tables:
            if t.modulus != self.modulus:
                raise ValueError("table modulus mismatch")
        self.tables = list(tables)

    def observe_batch(self, residues: np.ndarray) -> None:
        """Observe a (n, 26) residue matrix column by column."""
        for col in range(N_SPARSE):
            self.tables[col].observe_batch(residues[:, col])

    def lookup_batch(self, residues: np.ndarray) -> np.ndarray:
        """Map a (n, 26) residue matrix to ids, column by column."""
        out = np.empty(residues.shape, dtype=np.uint32)
        for col in range(N_SPARSE):
            out[:, col] = self.tables[col].lookup_batch(residues[:, col])
        return out

    def sizes(self) -> list[int]:
        return [len(t) for t in self.tables]

    @property
    def nbytes(self) -> int:
        return sum(t.nbytes for t in self.tables)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return self.modulus == other.modulus and all(
            a == b for a, b in zip(self.tables, other.tables)
        )

    def __repr__(self) -> str:
        return f"Vocabulary(modulus={self.modulus}, sizes={self.sizes()})"
