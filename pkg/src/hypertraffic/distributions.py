"""Log-binned degree distributions and window-size scaling fits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrix import DegreeVector

DEFAULT_RESIDUAL_THRESHOLD = 0.15


@dataclass(frozen=True, eq=False)
class DegreeHistogram:
    """Sparse histogram ``n(d)``: ``counts[k]`` nodes have degree ``degrees[k]``."""

    degrees: np.ndarray
    counts: np.ndarray

    def __len__(self):
        return len(self.degrees)

    def __eq__(self, other):
        if not isinstance(other, DegreeHistogram):
            return NotImplemented
        return np.array_equal(self.degrees, other.degrees) and np.array_equal(
            self.counts, other.counts
        )

    @property
    def d_max(self):
        return int(self.degrees[-1]) if len(self.degrees) else 0

    @property
    def n_total(self):
        return int(self.counts.sum())

    def to_dict(self):
        return {int(d): int(n) for d, n in zip(self.degrees, self.counts)}


def histogram(v) -> DegreeHistogram:
    """Count how many elements of a degree vector take each degree value."""
    degrees = v.degrees if isinstance(v, DegreeVector) else np.asarray(v, dtype=np.uint64)
    if len(degrees) == 0:
        z = np.zeros(0, dtype=np.uint64)
        return DegreeHistogram(z, np.zeros(0, dtype=np.int64))
    d, n = np.unique(degrees, return_counts=True)
    if d[0] < 1:
        raise ValueError("degrees must be >= 1")
    return DegreeHistogram(d.astype(np.uint64), n.astype(np.int64))


def log2_bin_index(degrees) -> np.ndarray:
    """``ceil(log2(d))`` computed exactly for integer ``d >= 1``.

    Degree 1 lands in bin 0 and bin ``i`` covers ``(2**(i-1), 2**i]``.
    """
    d = np.asarray(degrees, dtype=np.uint64)
    m = d - np.uint64(1)
    if len(m) and m.max() >= 2**53:
        return np.array([int(x).bit_length() for x in m], dtype=np.int64)
    # frexp exponent of m equals m.bit_length() while m is exact in float64
    return np.frexp(m.astype(np.float64))[1].astype(np.int64)


@dataclass(frozen=True, eq=False)
class BinnedDistribution:
    """Differential cumulative probability over bins with edges ``2**i``.

    Bins run densely from 0 to ``ceil(log2(d_max))``; empty bins carry 0.
    """

    masses: np.ndarray
    bin_counts: np.ndarray = field(repr=False)

    @property
    def indices(self):
        return np.arange(len(self.masses))

    @property
    def edges(self):
        return [2**i for i in range(len(self.masses))]

    def cumulative(self):
        """``P(d_i)`` at each bin edge."""
        return np.cumsum(self.bin_counts) / self.bin_counts.sum()

    def __len__(self):
        return len(self.masses)

    def __eq__(self, other):
        if not isinstance(other, BinnedDistribution):
            return NotImplemented
        return np.array_equal(self.bin_counts, other.bin_counts)

    def to_dict(self):
        return {2**i: float(m) for i, m in enumerate(self.masses)}


def bin_distribution(h: DegreeHistogram) -> BinnedDistribution:
    """Pool ``n(d)`` into logarithmic bins and normalize.

    Masses are integer bin counts divided by the node count, which equals
    ``P(d_i) - P(d_{i-1})`` of the cumulative probability but avoids the
    cancellation error of differencing two floats.
    """
    if len(h) == 0:
        raise ValueError("cannot normalize an empty histogram")
    idx = log2_bin_index(h.degrees)
    counts = np.zeros(int(idx[-1]) + 1, dtype=np.int64)
    np.add.at(counts, idx, h.counts)
    return BinnedDistribution(counts / h.n_total, counts)


def binned(v) -> BinnedDistribution:
    """``bin_distribution(histogram(v))`` for any nonempty degree vector."""
    return bin_distribution(histogram(v))


@dataclass(frozen=True, eq=False)
class DistributionStats:
    """Per-bin mean and population standard deviation over windows."""

    mean: np.ndarray
    std: np.ndarray
    n_windows: int

    @property
    def edges(self):
        return [2**i for i in range(len(self.mean))]


def window_stats(distributions) -> DistributionStats:
    dists = list(distributions)
    if not dists:
        raise ValueError("need at least one distribution")
    width = max(len(d) for d in dists)
    m = np.zeros((len(dists), width))
    for k, d in enumerate(dists):
        m[k, : len(d)] = d.masses
    return DistributionStats(m.mean(axis=0), m.std(axis=0), len(dists))


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares power law ``value ~ 2**intercept * N_V**exponent``."""

    quantity: str
    window_sizes: tuple
    means: tuple
    stds: tuple
    exponent: float
    intercept: float
    residual: float
    threshold: float = DEFAULT_RESIDUAL_THRESHOLD

    @property
    def scaling(self):
        """False when the residual is too large for a simple power law."""
        return bool(self.residual <= self.threshold)

    @property
    def verdict(self):
        return "scaling" if self.scaling else "none"

    def predict(self, window_sizes):
        x = np.log2(np.asarray(window_sizes, dtype=np.float64))
        return 2.0 ** (self.intercept + self.exponent * x)


def fit_scaling(window_sizes, means, stds=None, quantity="", threshold=DEFAULT_RESIDUAL_THRESHOLD):
    """Fit ``log2(mean) = exponent * log2(N_V) + intercept`` by OLS.

    ``residual`` is the root-mean-square residual in log2 units.
    """
    n_v = np.asarray(window_sizes, dtype=np.float64)
    y = np.asarray(means, dtype=np.float64)
    if n_v.shape != y.shape or n_v.ndim != 1:
        raise ValueError("window_sizes and means must be 1-d and the same length")
    if len(n_v) < 2:
        raise ValueError("need at least two window sizes to fit a scaling relation")
    if np.any(np.diff(n_v) <= 0):
        raise ValueError("window sizes must be strictly increasing")
    if np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise ValueError(f"cannot fit {quantity or 'quantity'}: means must be positive")
    x = np.log2(n_v)
    ly = np.log2(y)
    xm, ym = x.mean(), ly.mean()
    slope = float(np.sum((x - xm) * (ly - ym)) / np.sum((x - xm) ** 2))
    intercept = float(ym - slope * xm)
    resid = ly - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    if stds is None:
        stds = np.zeros_like(y)
    return ScalingFit(
        quantity=quantity,
        window_sizes=tuple(int(v) for v in window_sizes),
        means=tuple(float(v) for v in y),
        stds=tuple(float(v) for v in np.asarray(stds, dtype=np.float64)),
        exponent=slope,
        intercept=intercept,
        residual=rms,
        threshold=threshold,
    )


def _to_common_grid(series, n_points):
    s = np.asarray(series, dtype=np.float64)
    block = len(s) // n_points
    return s[: block * n_points].reshape(n_points, block).mean(axis=1)


def alignment_check(curves, beta, n0):
    """Mean relative spread across window sizes after rescaling.

    ``curves`` maps each window size ``N_V`` to its time series of
    ``quantity / N_V``. Each series is multiplied by ``(N_V / n0)**beta``
    and block-averaged onto the time grid of the shortest series, so that
    every point compares the same span of packets. The return value is the
    time-average of ``(max - min) / mean`` across levels.
    """
    if len(curves) < 2:
        raise ValueError("need at least two levels")
    n_points = min(len(v) for v in curves.values())
    if n_points == 0:
        raise ValueError("every level needs at least one window")
    rows = []
    for n_v, series in sorted(curves.items()):
        rows.append(_to_common_grid(series, n_points) * (n_v / n0) ** beta)
    m = np.vstack(rows)
    mean = m.mean(axis=0)
    spread = m.max(axis=0) - m.min(axis=0)
    rel = np.divide(spread, mean, out=np.zeros_like(spread), where=mean != 0)
    return float(rel.mean())
