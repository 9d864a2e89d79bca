"""Synthetic packet streams for simple gateway topologies.

Every stream separates internal and external IDs: internal nodes live in
one contiguous range (:data:`INTERNAL_RANGE`), external nodes are spread
over the upper half of the 64-bit space so the matrices are genuinely
hypersparse.

``expected_exponent`` gives the analytic scaling exponent of each quantity
for the four simple topologies. It follows from whether each side of a
quadrant is *fresh* (a new node per packet, so its count grows with N_V)
or *fixed* (a bounded set of nodes).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quantities import QUANTITY_NAMES, InternalSet

INTERNAL_LO = 1 << 32
INTERNAL_HI = (1 << 33) - 1
INTERNAL_RANGE = (INTERNAL_LO, INTERNAL_HI)

_EXTERNAL_BIT = np.uint64(1 << 63)
_EXTERNAL_MASK = np.uint64((1 << 63) - 1)
_SPREAD = np.uint64(0x9E3779B97F4A7C15)  # odd, so multiplication mod 2**63 is a bijection

SIMPLE_KINDS = ("isolated_links", "single_link", "internal_supernode", "external_supernode")
KINDS = SIMPLE_KINDS + ("zipf",)


def internal_id(k):
    k = np.asarray(k, dtype=np.uint64)
    if k.size and int(k.max()) > INTERNAL_HI - INTERNAL_LO:
        raise ValueError("internal population exceeds the internal ID range")
    return k + np.uint64(INTERNAL_LO)


def external_id(k):
    k = np.asarray(k, dtype=np.uint64)
    return ((k * _SPREAD) & _EXTERNAL_MASK) | _EXTERNAL_BIT


def internal_set():
    return InternalSet(ranges=[INTERNAL_RANGE])


@dataclass(frozen=True)
class TopologySpec:
    """Parameters of one synthetic stream.

    ``peers`` bounds the supernode's peer pool (cycled); ``None`` draws a
    fresh peer for every packet (every round trip when balanced).
    """

    kind: str
    packets: int
    balanced: bool = False
    peers: int | None = None
    zipf_s: float = 1.0
    population: int = 1 << 24
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown topology {self.kind!r}; expected one of {KINDS}")
        if self.packets < 0:
            raise ValueError("packets must be >= 0")
        if self.balanced and (self.packets < 2 or self.packets % 2):
            raise ValueError("balanced streams need an even packet count >= 2")
        if self.peers is not None and self.peers < 1:
            raise ValueError("peers must be >= 1")
        if self.kind == "zipf":
            if self.zipf_s <= 0:
                raise ValueError("zipf exponent must be positive")
            if self.population < 1 or self.population > INTERNAL_HI - INTERNAL_LO + 1:
                raise ValueError("population out of range")


@dataclass(frozen=True, eq=False)
class SyntheticStream:
    records: np.ndarray
    internal: InternalSet
    spec: TopologySpec

    def __len__(self):
        return len(self.records)


@lru_cache(maxsize=4)
def _zipf_cdf(s, population):
    w = np.arange(1, population + 1, dtype=np.float64) ** -s
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf.flags.writeable = False
    return cdf


def zipf_ranks(rng, n, s, population):
    """Draw ``n`` ranks in ``[0, population)`` with ``P(r) ~ (r+1)**-s``."""
    cdf = _zipf_cdf(float(s), int(population))
    u = rng.random(n)
    # searching in sorted order keeps the table lookups cache friendly
    order = np.argsort(u)
    r = np.empty(n, dtype=np.int64)
    r[order] = np.searchsorted(cdf, u[order], side="right")
    return np.minimum(r, population - 1).astype(np.uint64)


def _interleave(ext_to_int, int_to_ext):
    out = np.empty((len(ext_to_int) + len(int_to_ext), 2), dtype=np.uint64)
    out[0::2] = ext_to_int
    out[1::2] = int_to_ext
    return out


def generate(spec: TopologySpec) -> SyntheticStream:
    """Produce the packet stream described by ``spec``.

    Balanced streams alternate external->internal and internal->external
    packets, so every window of even size is itself balanced. Peers of a
    supernode answer on the reverse link within the same round trip.
    """
    n = spec.packets
    n_conv = n // 2 if spec.balanced else n  # conversations (ext->int packets)
    idx = np.arange(n_conv, dtype=np.uint64)
    if spec.peers is not None:
        idx = idx % np.uint64(spec.peers)
    zero = np.zeros(n_conv, dtype=np.uint64)

    if spec.kind == "zipf":
        rng = np.random.default_rng(spec.seed)
        ext = external_id(zipf_ranks(rng, n_conv, spec.zipf_s, spec.population))
        inn = internal_id(zipf_ranks(rng, n_conv, spec.zipf_s, spec.population))
        fwd = np.column_stack([ext, inn])
        if spec.balanced:
            ext2 = external_id(zipf_ranks(rng, n_conv, spec.zipf_s, spec.population))
            inn2 = internal_id(zipf_ranks(rng, n_conv, spec.zipf_s, spec.population))
            records = _interleave(fwd, np.column_stack([inn2, ext2]))
        else:
            records = fwd
        return SyntheticStream(np.ascontiguousarray(records), internal_set(), spec)

    if spec.kind == "isolated_links":
        # every conversation gets its own pair of nodes; ``peers`` does not apply
        fresh = np.arange(n_conv, dtype=np.uint64)
        ext, inn = external_id(fresh), internal_id(fresh)
    elif spec.kind == "single_link":
        ext, inn = external_id(zero), internal_id(zero)
    elif spec.kind == "internal_supernode":
        ext, inn = external_id(idx), internal_id(zero)
    else:  # external_supernode
        ext, inn = external_id(zero), internal_id(idx)

    fwd = np.column_stack([ext, inn])
    records = _interleave(fwd, fwd[:, ::-1]) if spec.balanced else fwd
    return SyntheticStream(np.ascontiguousarray(records), internal_set(), spec)


def _side_growth(kind, peers):
    """(external side fresh?, internal side fresh?) for a simple topology."""
    grows = peers is None
    return {
        "isolated_links": (True, True),
        "single_link": (False, False),
        "internal_supernode": (grows, False),
        "external_supernode": (False, grows),
    }[kind]


def _bipartite_exponents(src_fresh, dst_fresh):
    # src and dst each either grow with N_V (fresh) or stay bounded (fixed)
    any_fresh = src_fresh or dst_fresh
    return {
        "valid_packets": 1,
        "unique_links": int(any_fresh),
        "max_link_packets": int(not any_fresh),
        "unique_sources": int(src_fresh),
        "max_source_packets": int(not src_fresh),
        "max_source_fanout": int(not src_fresh and dst_fresh),
        "unique_destinations": int(dst_fresh),
        "max_destination_packets": int(not dst_fresh),
        "max_destination_fanin": int(not dst_fresh and src_fresh),
    }


def _full_matrix_exponents(ext_fresh, int_fresh):
    # balanced stream, both quadrants together; every node is source and destination
    any_fresh = ext_fresh or int_fresh
    any_fixed = not (ext_fresh and int_fresh)
    hub_fanout = (not ext_fresh and int_fresh) or (not int_fresh and ext_fresh)
    return {
        "valid_packets": 1,
        "unique_links": int(any_fresh),
        "max_link_packets": int(not any_fresh),
        "unique_sources": int(any_fresh),
        "max_source_packets": int(any_fixed),
        "max_source_fanout": int(hub_fanout),
        "unique_destinations": int(any_fresh),
        "max_destination_packets": int(any_fixed),
        "max_destination_fanin": int(hub_fanout),
    }


def expected_exponent(kind, quantity, quadrant="ei", balanced=True, peers=None):
    """Analytic exponent (0 or 1) of ``quantity`` vs. window size, or None.

    ``quadrant`` is ``ei``, ``ie``, ``ii``, ``ee`` or ``None`` for the whole
    matrix. None is returned where no closed form applies: the zipf
    topology, and quadrants that stay empty.
    """
    if quantity not in QUANTITY_NAMES:
        raise ValueError(f"unknown quantity {quantity!r}")
    if kind == "zipf":
        return None
    if kind not in SIMPLE_KINDS:
        raise ValueError(f"unknown topology {kind!r}")
    ext_fresh, int_fresh = _side_growth(kind, peers)
    if quadrant in ("ii", "ee"):
        return None
    if quadrant == "ei":
        return _bipartite_exponents(ext_fresh, int_fresh)[quantity]
    if quadrant == "ie":
        if not balanced:
            return None
        return _bipartite_exponents(int_fresh, ext_fresh)[quantity]
    if quadrant is None:
        if not balanced:
            return _bipartite_exponents(ext_fresh, int_fresh)[quantity]
        return _full_matrix_exponents(ext_fresh, int_fresh)[quantity]
    raise ValueError(f"unknown quadrant {quadrant!r}")


def write_sidecar(path, internal: InternalSet):
    """Write the internal-ID declaration that accompanies a stream file."""
    with open(path, "w") as f:
        f.write("# internal ID ranges (inclusive), one per line\n")
        f.write(internal.to_text())
