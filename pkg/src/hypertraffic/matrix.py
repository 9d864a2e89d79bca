"""Hypersparse traffic matrices.

A :class:`TrafficMatrix` stores only its nonzero entries as three parallel
``uint64`` arrays sorted by ``(row, col)``. Nothing is ever allocated in
proportion to the ID space, so source and destination IDs can be arbitrary
64-bit values (anonymized IPv4/IPv6 hashes, etc).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

UINT64_MAX = 2**64 - 1

_EMPTY = np.zeros(0, dtype=np.uint64)
_EMPTY.flags.writeable = False


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.uint64)
    a.flags.writeable = False
    return a


def _dense_rank(ids, kind=None):
    """Return ``(unique_ids, rank_of_each_input)`` for a uint64 array.

    Cheaper than ``np.unique(..., return_inverse=True)`` because the
    inverse is built with one scatter instead of a second sort.
    """
    order = np.argsort(ids, kind=kind)
    s = ids[order]
    new = np.empty(len(s), dtype=bool)
    if len(s):
        new[0] = True
        np.not_equal(s[1:], s[:-1], out=new[1:])
    ranks_sorted = np.cumsum(new, dtype=np.int64) - 1
    ranks = np.empty(len(s), dtype=np.int64)
    ranks[order] = ranks_sorted
    return s[new], ranks


def _coalesce(rows, cols, values, presorted_rows=False):
    """Sort triples by (row, col) and sum duplicates.

    ``presorted_rows`` signals that ``rows`` is a concatenation of a few
    sorted runs, which lets the stable sort merge runs in linear time.
    """
    n = len(rows)
    if n == 0:
        return _EMPTY, _EMPTY, _EMPTY
    urows, rrank = _dense_rank(rows, kind="stable" if presorted_rows else None)
    ucols, crank = _dense_rank(cols)
    key = rrank * np.int64(len(ucols)) + crank
    order = np.argsort(key, kind="stable" if presorted_rows else None)
    key = key[order]
    new = np.empty(n, dtype=bool)
    new[0] = True
    np.not_equal(key[1:], key[:-1], out=new[1:])
    starts = np.flatnonzero(new)
    ukey = key[starts]
    if values is None:
        summed = np.diff(np.append(starts, n)).astype(np.uint64)
    else:
        summed = np.add.reduceat(values[order], starts)
    r = urows[ukey // len(ucols)]
    c = ucols[ukey % len(ucols)]
    return r, c, summed


@dataclass(frozen=True, eq=False)
class TrafficMatrix:
    """Immutable hypersparse matrix of packet counts.

    Entry ``(i, j)`` is the number of packets sent from source ``i`` to
    destination ``j``. Use :meth:`from_records` rather than the constructor
    unless the arrays are already canonical (sorted, unique, nonzero).
    """

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    total: int

    @classmethod
    def empty(cls):
        return cls(_EMPTY, _EMPTY, _EMPTY, 0)

    @classmethod
    def from_records(cls, records):
        """Aggregate ``(src, dst)`` pairs, counting multiplicities.

        ``records`` is anything :func:`numpy.asarray` turns into an
        ``(n, 2)`` integer array, including an empty list.
        """
        arr = as_record_array(records)
        if len(arr) == 0:
            return cls.empty()
        r, c, v = _coalesce(arr[:, 0], arr[:, 1], None)
        return cls(_frozen(r), _frozen(c), _frozen(v), int(len(arr)))

    @classmethod
    def from_entries(cls, entries):
        """Build from a ``{(row, col): value}`` mapping; zero values are dropped."""
        items = [(int(i), int(j), int(v)) for (i, j), v in entries.items() if v]
        if not items:
            return cls.empty()
        for _, _, v in items:
            if v < 0 or v > UINT64_MAX:
                raise OverflowError(f"entry value {v} outside uint64")
        arr = np.array(items, dtype=np.uint64)
        r, c, v = _coalesce(arr[:, 0], arr[:, 1], arr[:, 2])
        total = sum(v for _, _, v in items)
        if total > UINT64_MAX:
            raise OverflowError("matrix total exceeds uint64")
        return cls(_frozen(r), _frozen(c), _frozen(v), total)

    @property
    def nnz(self):
        return len(self.values)

    def __len__(self):
        return self.nnz

    def __eq__(self, other):
        if not isinstance(other, TrafficMatrix):
            return NotImplemented
        return (
            self.total == other.total
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __add__(self, other):
        return add(self, other)

    def __repr__(self):
        return f"TrafficMatrix(nnz={self.nnz}, total={self.total})"

    def to_dict(self):
        """Entries as ``{(row, col): value}`` with Python ints."""
        return {
            (int(i), int(j)): int(v)
            for i, j, v in zip(self.rows, self.cols, self.values)
        }

    @cached_property
    def _row_starts(self):
        if self.nnz == 0:
            return np.zeros(0, dtype=np.intp)
        new = np.empty(self.nnz, dtype=bool)
        new[0] = True
        np.not_equal(self.rows[1:], self.rows[:-1], out=new[1:])
        return np.flatnonzero(new)

    @cached_property
    def _col_layout(self):
        # (permutation into column order, run starts within that order)
        order = np.argsort(self.cols)
        sc = self.cols[order]
        new = np.empty(len(sc), dtype=bool)
        if len(sc):
            new[0] = True
            np.not_equal(sc[1:], sc[:-1], out=new[1:])
        return order, np.flatnonzero(new)

    # reductions are cached because quantities and distributions share them

    @cached_property
    def _row_sums(self):
        if self.nnz == 0:
            return DegreeVector(_EMPTY, _EMPTY)
        starts = self._row_starts
        return DegreeVector(
            _frozen(self.rows[starts]), _frozen(np.add.reduceat(self.values, starts))
        )

    @cached_property
    def _col_sums(self):
        if self.nnz == 0:
            return DegreeVector(_EMPTY, _EMPTY)
        order, starts = self._col_layout
        return DegreeVector(
            _frozen(self.cols[order[starts]]),
            _frozen(np.add.reduceat(self.values[order], starts)),
        )

    @cached_property
    def _row_nnz(self):
        if self.nnz == 0:
            return DegreeVector(_EMPTY, _EMPTY)
        starts = self._row_starts
        return DegreeVector(
            _frozen(self.rows[starts]), _frozen(np.diff(np.append(starts, self.nnz)))
        )

    @cached_property
    def _col_nnz(self):
        if self.nnz == 0:
            return DegreeVector(_EMPTY, _EMPTY)
        order, starts = self._col_layout
        return DegreeVector(
            _frozen(self.cols[order[starts]]), _frozen(np.diff(np.append(starts, self.nnz)))
        )


def _from_python_ints(records):
    out = []
    for rec in records:
        if len(rec) != 2:
            raise ValueError(f"records must be (src, dst) pairs, got {rec!r}")
        pair = []
        for x in rec:
            if isinstance(x, (float, np.floating)) or not isinstance(x, (int, np.integer)):
                raise TypeError(f"packet IDs must be integers, got {x!r}")
            x = int(x)
            if x < 0 or x > UINT64_MAX:
                raise ValueError(f"packet ID {x} outside uint64")
            pair.append(x)
        out.append(pair)
    return np.array(out, dtype=np.uint64).reshape(len(out), 2)


def as_record_array(records):
    """Coerce records to a C-contiguous ``(n, 2)`` uint64 array."""
    if isinstance(records, np.ndarray):
        arr = records
        if arr.size == 0:
            return np.zeros((0, 2), dtype=np.uint64)
        if arr.dtype.kind == "i" and arr.min() < 0:
            raise ValueError("packet IDs must be non-negative")
        if arr.dtype.kind not in "iu":
            raise TypeError(f"packet IDs must be integers, got dtype {arr.dtype}")
        arr = arr.astype(np.uint64, copy=False)
    else:
        records = list(records)
        if not records:
            return np.zeros((0, 2), dtype=np.uint64)
        arr = _from_python_ints(records)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"records must have shape (n, 2), got {arr.shape}")
    return np.ascontiguousarray(arr)


def from_records(records):
    return TrafficMatrix.from_records(records)


def add(a, b):
    """Entrywise sum of two traffic matrices.

    Raises OverflowError if the combined packet total no longer fits in
    uint64; no entry can overflow unless the total does.
    """
    total = a.total + b.total
    if total > UINT64_MAX:
        raise OverflowError("traffic matrix total exceeds uint64")
    if b.nnz == 0:
        return a
    if a.nnz == 0:
        return b
    r, c, v = _coalesce(
        np.concatenate([a.rows, b.rows]),
        np.concatenate([a.cols, b.cols]),
        np.concatenate([a.values, b.values]),
        presorted_rows=True,
    )
    return TrafficMatrix(_frozen(r), _frozen(c), _frozen(v), total)


def zero_norm(a):
    """Same sparsity pattern with every stored value set to 1."""
    if a.nnz == 0 or a.total == a.nnz:
        return a
    return TrafficMatrix(a.rows, a.cols, _frozen(np.ones(a.nnz, dtype=np.uint64)), a.nnz)


@dataclass(frozen=True, eq=False)
class DegreeVector:
    """Sparse vector of per-node degrees, ids strictly increasing."""

    ids: np.ndarray
    degrees: np.ndarray

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, DegreeVector):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(
            self.degrees, other.degrees
        )

    __hash__ = None

    def to_dict(self):
        return {int(i): int(d) for i, d in zip(self.ids, self.degrees)}

    def max(self):
        return int(self.degrees.max()) if len(self.degrees) else 0


def row_sums(a):
    """Packets per source, restricted to sources that sent anything."""
    return a._row_sums


def col_sums(a):
    """Packets per destination."""
    return a._col_sums


def row_nnz(a):
    """Row sums of ``zero_norm(a)`` (fan-out) without materializing it."""
    return a._row_nnz


def col_nnz(a):
    """Column sums of ``zero_norm(a)`` (fan-in)."""
    return a._col_nnz


def max_value(a):
    return int(a.values.max()) if a.nnz else 0


def nnz(a):
    return a.nnz


def total(a):
    return a.total


def select(a, mask):
    """Sub-matrix keeping the entries where ``mask`` is true."""
    mask = np.asarray(mask, dtype=bool)
    if mask.all():
        return a
    v = a.values[mask]
    return TrafficMatrix(
        _frozen(a.rows[mask]), _frozen(a.cols[mask]), _frozen(v), int(v.sum(dtype=np.uint64))
    )
