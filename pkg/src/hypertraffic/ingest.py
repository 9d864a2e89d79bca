"""Reading, filtering and anonymizing packet source/destination streams.

Two on-disk formats are supported:

* binary ``HSTM``: the 4 magic bytes ``HSTM``, a little-endian uint32
  version (1), then back-to-back records of two little-endian uint64
  values ``(src, dst)``;
* CSV: one ``src,dst`` or ``src,dst,count`` record per line with an
  optional header. ``count`` repeats the pair that many times.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .matrix import UINT64_MAX, as_record_array
from .quantities import InternalSet
from .windows import iter_batches

MAGIC = b"HSTM"
VERSION = 1
HEADER = MAGIC + struct.pack("<I", VERSION)
RECORD_DTYPE = np.dtype("<u8")
RECORD_BYTES = 16
FORMATS = ("binary", "csv")


class PacketRecord(NamedTuple):
    src: int
    dst: int


class StreamFormatError(ValueError):
    """A stream file does not parse; ``offset`` locates the problem.

    For binary files ``offset`` is a byte offset, for CSV a 1-based line.
    """

    def __init__(self, message, path=None, offset=None, unit="byte"):
        where = f"{path}: " if path is not None else ""
        at = f" at {unit} {offset}" if offset is not None else ""
        super().__init__(f"{where}{message}{at}")
        self.path = path
        self.offset = offset
        self.unit = unit


def guess_format(path):
    with open(path, "rb") as f:
        head = f.read(4)
    return "binary" if head == MAGIC else "csv"


def read_batches(path, fmt=None, batch_size=1 << 16):
    """Yield ``(n, 2)`` uint64 arrays of records in file order.

    Memory use is bounded by ``batch_size`` regardless of file length
    (a CSV ``count`` column can make one batch larger than that).
    """
    fmt = fmt or guess_format(path)
    if fmt == "binary":
        yield from _read_binary(path, batch_size)
    elif fmt == "csv":
        yield from _read_csv(path, batch_size)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def read_stream(path, fmt=None):
    """Yield :class:`PacketRecord` tuples one at a time."""
    for batch in read_batches(path, fmt):
        for s, d in batch.tolist():
            yield PacketRecord(s, d)


def _read_binary(path, batch_size):
    with open(path, "rb") as f:
        head = f.read(len(HEADER))
        if len(head) == 0:
            return
        if head[:4] != MAGIC:
            raise StreamFormatError("bad magic, expected b'HSTM'", path, 0)
        if len(head) < len(HEADER):
            raise StreamFormatError("truncated header", path, len(head))
        (version,) = struct.unpack("<I", head[4:])
        if version != VERSION:
            raise StreamFormatError(f"unsupported version {version}", path, 4)
        offset = len(HEADER)
        while True:
            buf = f.read(RECORD_BYTES * batch_size)
            if not buf:
                return
            whole = len(buf) - len(buf) % RECORD_BYTES
            if whole != len(buf):
                raise StreamFormatError(
                    f"truncated final record ({len(buf) - whole} trailing bytes)",
                    path,
                    offset + whole,
                )
            arr = np.frombuffer(buf, dtype=RECORD_DTYPE).reshape(-1, 2)
            offset += len(buf)
            yield arr.astype(np.uint64)


def _parse_uint(tok):
    if not tok.isdigit():
        raise ValueError(tok)
    v = int(tok)
    if v > UINT64_MAX:
        raise ValueError(tok)
    return v


def _read_csv(path, batch_size):
    srcs, dsts, counts = [], [], []
    repeat = False

    def flush():
        arr = np.empty((len(srcs), 2), dtype=np.uint64)
        arr[:, 0] = srcs
        arr[:, 1] = dsts
        if repeat:
            arr = np.repeat(arr, np.asarray(counts, dtype=np.int64), axis=0)
        return arr

    with open(path, "r", newline="") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            fields = [t.strip() for t in line.split(",")]
            if lineno == 1 and not fields[0].isdigit():
                if fields[:2] != ["src", "dst"] or fields[2:] not in ([], ["count"]):
                    raise StreamFormatError(f"unrecognized header {line!r}", path, lineno, "line")
                continue
            if len(fields) not in (2, 3):
                raise StreamFormatError(
                    f"expected 2 or 3 fields, got {len(fields)}", path, lineno, "line"
                )
            try:
                s, d = _parse_uint(fields[0]), _parse_uint(fields[1])
                c = _parse_uint(fields[2]) if len(fields) == 3 else 1
            except ValueError as e:
                raise StreamFormatError(
                    f"not an unsigned decimal integer: {e.args[0]!r}", path, lineno, "line"
                ) from None
            if c != 1:
                repeat = True
            srcs.append(s)
            dsts.append(d)
            counts.append(c)
            if len(srcs) >= batch_size:
                yield flush()
                srcs, dsts, counts, repeat = [], [], [], False
    if srcs:
        yield flush()


def write_binary(path, records):
    """Write records (array or iterable of pairs/arrays) in HSTM format."""
    n = 0
    with open(path, "wb") as f:
        f.write(HEADER)
        for batch in iter_batches(records):
            f.write(batch.astype(RECORD_DTYPE, copy=False).tobytes())
            n += len(batch)
    return n


def write_csv(path, records, header=True):
    n = 0
    with open(path, "w") as f:
        if header:
            f.write("src,dst\n")
        for batch in iter_batches(records):
            f.writelines(f"{s},{d}\n" for s, d in batch.tolist())
            n += len(batch)
    return n


def _as_idset(x):
    if x is None or isinstance(x, InternalSet):
        return x
    return InternalSet(ids=x)


def _overlap(a: InternalSet, b: InternalSet):
    if len(a.ids) and len(b.ids) and np.intersect1d(a.ids, b.ids).size:
        return True
    if (len(a.ids) and b.contains(a.ids).any()) or (len(b.ids) and a.contains(b.ids).any()):
        return True
    return any(lo1 <= hi2 and lo2 <= hi1 for lo1, hi1 in a.ranges for lo2, hi2 in b.ranges)


@dataclass(frozen=True)
class ValidityFilter:
    """Allow/deny lists on source and destination IDs.

    Each field is an :class:`InternalSet` (IDs and/or ranges) or an iterable
    of IDs. A record passes when its source is allowed (or no allow list is
    given) and not denied, and likewise for its destination.
    """

    allow_src: InternalSet | None = None
    deny_src: InternalSet | None = None
    allow_dst: InternalSet | None = None
    deny_dst: InternalSet | None = None

    def __post_init__(self):
        for name in ("allow_src", "deny_src", "allow_dst", "deny_dst"):
            object.__setattr__(self, name, _as_idset(getattr(self, name)))
        for allow, deny, side in (
            (self.allow_src, self.deny_src, "source"),
            (self.allow_dst, self.deny_dst, "destination"),
        ):
            if allow is not None and deny is not None and _overlap(allow, deny):
                raise ValueError(f"{side} allow and deny sets overlap")

    @property
    def is_empty(self):
        return all(
            getattr(self, n) is None for n in ("allow_src", "deny_src", "allow_dst", "deny_dst")
        )

    def mask(self, batch):
        keep = np.ones(len(batch), dtype=bool)
        for col, allow, deny in ((0, self.allow_src, self.deny_src), (1, self.allow_dst, self.deny_dst)):
            if allow is not None:
                keep &= allow.contains(batch[:, col])
            if deny is not None:
                keep &= ~deny.contains(batch[:, col])
        return keep


def filter_valid(records, f: ValidityFilter):
    """Order-preserving filter; yields arrays for array input, tuples otherwise."""
    if f is None or f.is_empty:
        yield from records
        return
    if isinstance(records, (list, tuple)) and records and not isinstance(records[0], np.ndarray):
        arr = as_record_array(records)
        for s, d in arr[f.mask(arr)].tolist():
            yield PacketRecord(s, d)
        return
    for batch in iter_batches(records):
        yield batch[f.mask(batch)]


# -- anonymization ---------------------------------------------------------

_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xBF58476D1CE4E5B9)
_LOW32 = np.uint64(0xFFFFFFFF)
ROUNDS = 4


def parse_key(key):
    """Accept 16 raw bytes or a 32-digit hex string."""
    if isinstance(key, str):
        key = key.strip().lower().removeprefix("0x")
        if len(key) != 32:
            raise ValueError("anonymization key must be 32 hex digits (128 bits)")
        key = bytes.fromhex(key)
    key = bytes(key)
    if len(key) != 16:
        raise ValueError("anonymization key must be 128 bits")
    return key


class Anonymizer:
    """Keyed 64-bit permutation: a balanced Feistel network on 32-bit halves.

    A Feistel network is invertible for any round function, so distinct IDs
    always map to distinct IDs and :meth:`invert` recovers the originals.
    """

    def __init__(self, key):
        digest = hashlib.blake2b(parse_key(key), digest_size=8 * ROUNDS, person=b"hstm-anon").digest()
        self.round_keys = [
            np.uint64(int.from_bytes(digest[8 * r : 8 * r + 8], "little")) for r in range(ROUNDS)
        ]

    @staticmethod
    def _f(half, k):
        h = (half ^ k) * _M1
        h ^= h >> np.uint64(29)
        h *= _M2
        h ^= h >> np.uint64(32)
        return h & _LOW32

    def permute(self, ids):
        x = np.asarray(ids, dtype=np.uint64)
        left, right = np.atleast_1d(x >> np.uint64(32)), np.atleast_1d(x & _LOW32)
        for k in self.round_keys:
            left, right = right, left ^ self._f(right, k)
        return ((left << np.uint64(32)) | right).reshape(x.shape)

    def invert(self, ids):
        x = np.asarray(ids, dtype=np.uint64)
        left, right = np.atleast_1d(x >> np.uint64(32)), np.atleast_1d(x & _LOW32)
        for k in reversed(self.round_keys):
            left, right = right ^ self._f(left, k), left
        return ((left << np.uint64(32)) | right).reshape(x.shape)

    def __call__(self, records):
        arr = as_record_array(records)
        return np.column_stack([self.permute(arr[:, 0]), self.permute(arr[:, 1])])


def anonymize(records, key):
    """Relabel every ID with the keyed permutation; yields like :func:`filter_valid`."""
    anon = key if isinstance(key, Anonymizer) else Anonymizer(key)
    if isinstance(records, (list, tuple)) and records and not isinstance(records[0], np.ndarray):
        for s, d in anon(records).tolist():
            yield PacketRecord(s, d)
        return
    for batch in iter_batches(records):
        yield anon(batch)
