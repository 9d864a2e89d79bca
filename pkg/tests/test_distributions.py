from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypertraffic.distributions import (
    alignment_check,
    bin_distribution,
    binned,
    fit_scaling,
    histogram,
    log2_bin_index,
    window_stats,
)
from oracle import brute_bins


def test_histogram_example():
    h = histogram([1, 1, 2, 8, 1, 3])
    assert h.to_dict() == {1: 3, 2: 1, 3: 1, 8: 1}
    assert h.d_max == 8 and h.n_total == 6


def test_log2_bin_index():
    d = np.array([1, 2, 3, 4, 5, 8, 9, 2**52, 2**52 + 1, 2**63, 2**64 - 1], dtype=np.uint64)
    assert log2_bin_index(d).tolist() == [0, 1, 2, 2, 3, 3, 4, 52, 53, 63, 64]


def test_four_bin_example():
    v = [1] * 6 + [2] * 2 + [3] + [8]
    d = binned(v)
    assert d.edges == [1, 2, 4, 8]
    assert d.masses.tolist() == [0.6, 0.2, 0.1, 0.1]
    assert d.masses.sum() == 1.0


def test_single_degree_cases():
    assert binned([1] * 7).masses.tolist() == [1.0]
    for j in range(6):
        d = binned([2**j])
        assert len(d) == j + 1
        assert d.masses.tolist() == [0.0] * j + [1.0]


def test_empty_histogram_rejected():
    with pytest.raises(ValueError):
        bin_distribution(histogram([]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(1, 5000), min_size=1, max_size=200))
def test_bins_match_cumulative_difference(degrees):
    d = binned(degrees)
    ref = brute_bins(degrees)
    assert [Fraction(int(c), len(degrees)) for c in d.bin_counts] == ref
    assert abs(d.masses.sum() - 1.0) <= 1e-12
    p = d.cumulative()
    assert np.all(np.diff(p) >= 0) and p[-1] == 1.0


def test_window_stats_example():
    a = binned([1] * 4 + [2] * 6)
    b = binned([1] * 6 + [2] * 4)
    s = window_stats([a, b])
    assert np.allclose(s.mean, [0.5, 0.5]) and np.allclose(s.std, [0.1, 0.1])
    assert s.n_windows == 2


def test_window_stats_pads_short_distributions():
    s = window_stats([binned([1]), binned([4])])
    assert np.allclose(s.mean, [0.5, 0.0, 0.5])
    assert np.allclose(s.std, [0.5, 0.0, 0.5])


def test_fit_exact_power_laws():
    n = [2**k for k in range(10, 17)]
    for alpha in (0.0, 0.5, 1.0):
        f = fit_scaling(n, [3.0 * x**alpha for x in n])
        assert f.exponent == pytest.approx(alpha, abs=1e-12)
        assert f.residual == pytest.approx(0.0, abs=1e-12)
        assert f.verdict == "scaling"
        assert np.allclose(f.predict(n), [3.0 * x**alpha for x in n])


def test_fit_recovers_exponent_under_noise(rng):
    n = np.array([2**k for k in range(10, 17)], dtype=float)
    for alpha in (0.0, 0.5, 1.0):
        for _ in range(20):
            y = n**alpha * rng.uniform(0.9, 1.1, size=len(n))
            assert abs(fit_scaling(n, y).exponent - alpha) <= 0.05


def test_fit_threshold_verdict():
    n = [2**k for k in range(10, 16)]
    zigzag = [1.0, 8.0, 1.0, 8.0, 1.0, 8.0]
    f = fit_scaling(n, zigzag)
    assert f.residual > 0.15 and f.verdict == "none"
    assert fit_scaling(n, zigzag, threshold=2.0).verdict == "scaling"


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_scaling([1024], [1.0])
    with pytest.raises(ValueError):
        fit_scaling([1024, 2048], [1.0, 0.0])
    with pytest.raises(ValueError):
        fit_scaling([2048, 1024], [1.0, 2.0])


def test_alignment_of_exact_law_is_zero():
    # q/N_V ~ N_V**-0.5 collapses at beta=0.5
    curves = {n: [n**-0.5] * (4096 // n) for n in (256, 512, 1024)}
    assert alignment_check(curves, 0.5, 256) == pytest.approx(0.0, abs=1e-12)
    assert alignment_check(curves, 0.0, 256) > 0.5


def test_alignment_minimized_near_true_beta():
    curves = {n: [n**-0.3] * (8192 // n) for n in (256, 512, 1024, 2048)}
    betas = np.linspace(0, 1, 101)
    best = betas[np.argmin([alignment_check(curves, b, 256) for b in betas])]
    assert best == pytest.approx(0.3, abs=0.01)


def test_alignment_block_averages_onto_coarse_grid():
    curves = {1: [1.0, 3.0, 5.0, 7.0], 2: [2.0, 6.0]}
    assert alignment_check(curves, 0.0, 1) == 0.0
