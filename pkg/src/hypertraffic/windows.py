"""Constant-packet windows and the binary multi-temporal hierarchy.

The stream is cut into windows of exactly ``N_V0`` valid packets. Level
``k`` of the hierarchy holds windows of ``N_V0 * 2**k`` packets, each the
sum of two adjacent level ``k-1`` windows, so every larger window is built
from matrices already in hand instead of from the raw packets again.
"""

from __future__ import annotations

import itertools
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import BinnedDistribution, binned, window_stats
from .matrix import UINT64_MAX, TrafficMatrix, add, as_record_array
from .quantities import (
    DEGREE_TYPES,
    QUANTITY_NAMES,
    QuadrantSpec,
    QuantityVector,
    compute_quantities,
    degree_values,
    quadrant,
)

DEFAULT_BATCH = 1 << 16


@dataclass(frozen=True)
class WindowSpec:
    base_window: int
    levels: int = 1
    start_index: int = 0

    def __post_init__(self):
        b = self.base_window
        if b < 2 or b & (b - 1):
            raise ValueError(f"base window must be a power of two >= 2, got {b}")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if b << (self.levels - 1) > UINT64_MAX:
            raise ValueError("largest window does not fit in uint64")
        if self.start_index < 0:
            raise ValueError("start_index must be >= 0")

    def window_size(self, level):
        return self.base_window << level

    @property
    def window_sizes(self):
        return [self.window_size(k) for k in range(self.levels)]


def iter_batches(records, batch_size=DEFAULT_BATCH):
    """Normalize any record source into a stream of ``(n, 2)`` uint64 arrays.

    Accepts an array, a list of pairs, an iterator of pairs, or an
    iterator of arrays (as produced by :func:`hypertraffic.ingest.read_batches`).
    """
    if isinstance(records, np.ndarray):
        yield as_record_array(records)
        return
    it = iter(records)
    first = next(it, None)
    if first is None:
        return
    if isinstance(first, np.ndarray) and first.ndim == 2:
        yield as_record_array(first)
        for b in it:
            yield as_record_array(b)
        return
    it = itertools.chain([first], it)
    while True:
        chunk = list(itertools.islice(it, batch_size))
        if not chunk:
            return
        yield as_record_array([(int(s), int(d)) for s, d in chunk])


def iter_window_records(records, n_v):
    """Yield consecutive ``(n_v, 2)`` record blocks; a short tail is dropped."""
    if n_v < 1:
        raise ValueError("window size must be >= 1")
    pending = []
    have = 0
    for batch in iter_batches(records):
        if len(batch) == 0:
            continue
        pending.append(batch)
        have += len(batch)
        if have < n_v:
            continue
        buf = np.concatenate(pending) if len(pending) > 1 else pending[0]
        n_full = len(buf) // n_v
        for k in range(n_full):
            yield buf[k * n_v : (k + 1) * n_v]
        rest = buf[n_full * n_v :]
        pending = [rest] if len(rest) else []
        have = len(rest)


def partition(records, n_v):
    """Traffic matrices of exactly ``n_v`` packets each, in stream order."""
    for block in iter_window_records(records, n_v):
        yield TrafficMatrix.from_records(block)


def build_hierarchy(leaves, levels):
    """All levels at once: ``out[k][m] = out[k-1][2m] + out[k-1][2m+1]``.

    Unpaired matrices at the end of a level do not propagate upward.
    """
    leaves = list(leaves)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if len(leaves) < 1 << (levels - 1):
        raise ValueError(f"{levels} levels need at least {1 << (levels - 1)} leaves")
    out = [leaves]
    for _ in range(1, levels):
        prev = out[-1]
        out.append([add(prev[2 * m], prev[2 * m + 1]) for m in range(len(prev) // 2)])
    return out


def iter_hierarchy(leaves, levels):
    """Streaming form of :func:`build_hierarchy`.

    Yields ``(level, index, matrix)`` as soon as each window is complete.
    At most one unpaired matrix per level is held, so memory stays bounded
    by the hierarchy depth rather than the stream length.
    """
    carry_slots = [None] * levels
    counts = [0] * levels
    for leaf in leaves:
        node = leaf
        for k in range(levels):
            yield k, counts[k], node
            counts[k] += 1
            if k == levels - 1:
                break
            if carry_slots[k] is None:
                carry_slots[k] = node
                break
            node = add(carry_slots[k], node)
            carry_slots[k] = None


@dataclass(frozen=True)
class WindowResult:
    index: int
    quantities: QuantityVector
    # degree type -> distribution, None when the window has no such nodes
    distributions: dict = field(default_factory=dict)


def binned_or_none(a: TrafficMatrix, kind: str) -> BinnedDistribution | None:
    v = degree_values(a, kind)
    return binned(v) if len(v) else None


def evaluate_window(a, index=0, distributions=DEGREE_TYPES, quantities=True):
    q = compute_quantities(a) if quantities else None
    return WindowResult(index, q, {kind: binned_or_none(a, kind) for kind in distributions})


@dataclass
class HierarchyLevelResult:
    """Per-window results for one level of the hierarchy."""

    level: int
    window_size: int
    windows: list = field(default_factory=list)

    def __len__(self):
        return len(self.windows)

    @property
    def quantities(self):
        return [w.quantities for w in self.windows]

    def quantity_array(self, name=None):
        """Windows x quantities int64 table, or one column by ``name``."""
        table = np.array([w.quantities.as_tuple() for w in self.windows], dtype=np.int64)
        table = table.reshape(len(self.windows), len(QUANTITY_NAMES))
        if name is None:
            return table
        return table[:, QUANTITY_NAMES.index(name)]

    def distributions(self, kind):
        return [w.distributions.get(kind) for w in self.windows]

    def stats(self, kind):
        """Mean/std of the binned distribution over windows that have one."""
        present = [d for d in self.distributions(kind) if d is not None]
        if not present:
            return None
        return window_stats(present)


def iter_leaves(records, spec: WindowSpec, quadrant_spec: QuadrantSpec | None = None):
    blocks = iter_window_records(records, spec.base_window)
    if spec.start_index:
        blocks = itertools.islice(blocks, spec.start_index, None)
    for block in blocks:
        a = TrafficMatrix.from_records(block)
        yield quadrant(a, quadrant_spec) if quadrant_spec is not None else a


def evaluate_hierarchy(
    records,
    spec: WindowSpec,
    quadrant_spec: QuadrantSpec | None = None,
    distributions=DEGREE_TYPES,
    quantities=True,
    threads=1,
):
    """Evaluate quantities and distributions at every level in one pass.

    With ``quadrant_spec`` each leaf is restricted to that quadrant before
    aggregation; restriction commutes with addition, so this equals
    restricting every aggregated window. Returns one
    :class:`HierarchyLevelResult` per level. ``threads > 1`` evaluates
    windows on a pool; results are identical to the sequential run.
    """
    results = [HierarchyLevelResult(k, spec.window_size(k)) for k in range(spec.levels)]
    distributions = tuple(distributions)
    unknown = set(distributions) - set(DEGREE_TYPES)
    if unknown:
        raise ValueError(f"unknown degree types: {sorted(unknown)}")
    stream = iter_hierarchy(iter_leaves(records, spec, quadrant_spec), spec.levels)

    if threads <= 1:
        for level, index, a in stream:
            results[level].windows.append(evaluate_window(a, index, distributions, quantities))
        return results

    def collect(fut_level):
        level, fut = fut_level
        results[level].windows.append(fut.result())

    pending = deque()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for level, index, a in stream:
            pending.append(
                (level, pool.submit(evaluate_window, a, index, distributions, quantities))
            )
            while len(pending) > 2 * threads:
                collect(pending.popleft())
        while pending:
            collect(pending.popleft())
    return results

