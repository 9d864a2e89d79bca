"""Network quantities, degree vectors and gateway quadrants."""

from __future__ import annotations

import ipaddress
from dataclasses import asdict, astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .matrix import (
    TrafficMatrix,
    col_nnz,
    col_sums,
    max_value,
    row_nnz,
    row_sums,
    select,
)

QUADRANTS = ("ei", "ie", "ii", "ee")
DEGREE_TYPES = (
    "source_packets",
    "source_fanout",
    "link_packets",
    "destination_fanin",
    "destination_packets",
)


@dataclass(frozen=True)
class QuantityVector:
    """Scalar aggregates of one traffic matrix (all plain ints)."""

    valid_packets: int = 0
    unique_links: int = 0
    max_link_packets: int = 0
    unique_sources: int = 0
    max_source_packets: int = 0
    max_source_fanout: int = 0
    unique_destinations: int = 0
    max_destination_packets: int = 0
    max_destination_fanin: int = 0

    @classmethod
    def names(cls):
        return tuple(f.name for f in fields(cls))

    def as_dict(self):
        return asdict(self)

    def as_tuple(self):
        return astuple(self)


QUANTITY_NAMES = QuantityVector.names()


def compute_quantities(a: TrafficMatrix) -> QuantityVector:
    if a.nnz == 0:
        return QuantityVector()
    src = row_sums(a)
    dst = col_sums(a)
    return QuantityVector(
        valid_packets=a.total,
        unique_links=a.nnz,
        max_link_packets=max_value(a),
        unique_sources=len(src),
        max_source_packets=src.max(),
        max_source_fanout=row_nnz(a).max(),
        unique_destinations=len(dst),
        max_destination_packets=dst.max(),
        max_destination_fanin=col_nnz(a).max(),
    )


def degree_vectors(a: TrafficMatrix) -> dict:
    """Per-node degree vectors plus the multiset of link packet counts.

    ``link_packets`` is returned as a plain uint64 array; the other four
    are :class:`~hypertraffic.matrix.DegreeVector`.
    """
    out = {k: f(a) for k, f in _VECTOR_KERNELS.items()}
    out["link_packets"] = a.values
    return out


_VECTOR_KERNELS = {
    "source_packets": row_sums,
    "source_fanout": row_nnz,
    "destination_fanin": col_nnz,
    "destination_packets": col_sums,
}


def degree_values(a: TrafficMatrix, kind: str) -> np.ndarray:
    """The raw degree multiset of one degree type."""
    if kind == "link_packets":
        return a.values
    try:
        return _VECTOR_KERNELS[kind](a).degrees
    except KeyError:
        raise ValueError(f"unknown degree type {kind!r}; expected one of {DEGREE_TYPES}") from None


class InternalSet:
    """Membership predicate for the internal side of a gateway.

    Combines an explicit set of IDs with inclusive ``(lo, hi)`` ranges.
    """

    def __init__(self, ids=(), ranges=()):
        self.ids = np.unique(np.asarray(list(ids), dtype=np.uint64))
        merged = []
        for lo, hi in sorted((int(lo), int(hi)) for lo, hi in ranges):
            if lo > hi:
                raise ValueError(f"empty range {lo}-{hi}")
            if merged and lo <= merged[-1][1] + 1:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        self.ranges = [tuple(r) for r in merged]
        self._lo = np.array([r[0] for r in self.ranges], dtype=np.uint64)
        self._hi = np.array([r[1] for r in self.ranges], dtype=np.uint64)

    def __repr__(self):
        return f"InternalSet(ids={len(self.ids)}, ranges={self.ranges})"

    def __eq__(self, other):
        return (
            isinstance(other, InternalSet)
            and np.array_equal(self.ids, other.ids)
            and self.ranges == other.ranges
        )

    def contains(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.uint64)
        out = np.isin(ids, self.ids) if len(self.ids) else np.zeros(ids.shape, bool)
        if self.ranges:
            k = np.searchsorted(self._lo, ids, side="right") - 1
            ok = k >= 0
            kk = np.where(ok, k, 0)
            out |= ok & (ids <= self._hi[kk])
        return out

    def __contains__(self, ident):
        return bool(self.contains(np.array([ident], dtype=np.uint64))[0])

    @classmethod
    def parse(cls, spec: str) -> "InternalSet":
        """Parse ``lo-hi``, a single ID, an IPv4 CIDR, or a file of those.

        Several specs can be joined with commas. Files hold one spec per
        line; ``#`` starts a comment.
        """
        p = Path(spec)
        if p.is_file():
            tokens = []
            for line in p.read_text().splitlines():
                line = line.split("#", 1)[0].strip()
                if line:
                    tokens.extend(t.strip() for t in line.split(","))
        else:
            tokens = [t.strip() for t in spec.split(",")]
        ids, ranges = [], []
        for tok in tokens:
            if not tok:
                continue
            if "/" in tok:
                ranges.append(cidr_to_range(tok))
            elif "-" in tok:
                lo, hi = tok.split("-", 1)
                ranges.append((_parse_id(lo), _parse_id(hi)))
            else:
                ids.append(_parse_id(tok))
        return cls(ids, ranges)

    def to_text(self) -> str:
        lines = [f"{lo}-{hi}" for lo, hi in self.ranges]
        lines += [str(int(i)) for i in self.ids]
        return "\n".join(lines) + "\n"


def _parse_id(tok):
    tok = tok.strip()
    if tok.count(".") == 3:
        return ipv4_to_id(tok)
    return int(tok, 0)


def ipv4_to_id(addr: str) -> int:
    """Dotted-quad IPv4 to its integer value (fits well within uint64)."""
    return int(ipaddress.IPv4Address(addr))


def cidr_to_range(cidr: str):
    net = ipaddress.IPv4Network(cidr, strict=False)
    return int(net.network_address), int(net.broadcast_address)


@dataclass(frozen=True)
class QuadrantSpec:
    """Selects one internal/external block of the traffic matrix.

    ``selector`` is a two-letter code, source side first: ``ei`` is
    external to internal, ``ie`` internal to external, and so on.
    """

    internal: InternalSet
    selector: str = "ei"

    def __post_init__(self):
        if self.selector not in QUADRANTS:
            raise ValueError(f"quadrant must be one of {QUADRANTS}, got {self.selector!r}")


def quadrant(a: TrafficMatrix, q: QuadrantSpec) -> TrafficMatrix:
    if a.nnz == 0:
        return a
    src_in = q.internal.contains(a.rows)
    dst_in = q.internal.contains(a.cols)
    want_src = q.selector[0] == "i"
    want_dst = q.selector[1] == "i"
    return select(a, (src_in == want_src) & (dst_in == want_dst))
