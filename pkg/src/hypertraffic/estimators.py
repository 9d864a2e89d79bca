"""scikit-learn compatible front ends.

``WindowQuantities`` turns a packet stream into one row of network
quantities per window, ``MultiTemporalAnalyzer`` runs the whole window
hierarchy, and ``ScalingRegressor`` fits the power law of a quantity
against window size. All three follow the usual ``fit``/``transform``/
``predict`` and ``get_params``/``set_params`` conventions, so they slot
into pipelines, grid searches and ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_power_of_two,
    check_quadrant,
    check_records,
    check_window_sizes,
)
from .distributions import DEFAULT_RESIDUAL_THRESHOLD, alignment_check, fit_scaling
from .quantities import DEGREE_TYPES, QUANTITY_NAMES, compute_quantities, quadrant as restrict
from .windows import WindowSpec, evaluate_hierarchy, partition


class WindowQuantities(TransformerMixin, BaseEstimator):
    """Per-window network quantities of a packet stream.

    Parameters
    ----------
    window : int
        Packets per window. A trailing partial window is dropped.
    quadrant : {"ei", "ie", "ii", "ee"} or None
        Restrict every window to one gateway quadrant.
    internal : InternalSet, str, (lo, hi) or iterable of IDs, optional
        Internal side of the gateway; required with ``quadrant``.
    """

    def __init__(self, window=4096, quadrant=None, internal=None):
        self.window = window
        self.quadrant = quadrant
        self.internal = internal

    def fit(self, X, y=None):
        check_records(X)
        if int(self.window) < 1:
            raise ValueError("window must be >= 1")
        self.quadrant_spec_ = check_quadrant(self.quadrant, self.internal)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        """Return an ``(n_windows, 9)`` int64 array in :data:`QUANTITY_NAMES` order."""
        check_is_fitted(self, "quadrant_spec_")
        X = check_records(X)
        rows = []
        for a in partition(X, int(self.window)):
            if self.quadrant_spec_ is not None:
                a = restrict(a, self.quadrant_spec_)
            rows.append(compute_quantities(a).as_tuple())
        return np.array(rows, dtype=np.int64).reshape(len(rows), len(QUANTITY_NAMES))

    def get_feature_names_out(self, input_features=None):
        return np.array(QUANTITY_NAMES, dtype=object)


class MultiTemporalAnalyzer(BaseEstimator):
    """Quantities and degree distributions over a hierarchy of window sizes.

    Window sizes are ``base_window * 2**k`` for ``k < levels``. After
    ``fit``:

    ``levels_``
        list of :class:`~hypertraffic.windows.HierarchyLevelResult`
    ``window_sizes_``
        array of window sizes, one per level
    ``quantity_means_``, ``quantity_stds_``
        ``(levels, 9)`` arrays of per-level mean and std over windows
    """

    def __init__(
        self,
        base_window=4096,
        levels=5,
        quadrant=None,
        internal=None,
        distributions=DEGREE_TYPES,
        threads=1,
    ):
        self.base_window = base_window
        self.levels = levels
        self.quadrant = quadrant
        self.internal = internal
        self.distributions = distributions
        self.threads = threads

    def fit(self, X, y=None):
        spec = WindowSpec(check_power_of_two(self.base_window, "base_window"), int(self.levels))
        q = check_quadrant(self.quadrant, self.internal)
        records = X if _is_stream(X) else check_records(X)
        self.levels_ = evaluate_hierarchy(
            records, spec, q, tuple(self.distributions or ()), threads=int(self.threads)
        )
        if not self.levels_[-1].windows:
            raise ValueError(
                f"stream too short: the top level needs {spec.window_size(spec.levels - 1)} packets"
            )
        self.window_sizes_ = np.array(spec.window_sizes, dtype=np.int64)
        self.quantity_means_ = np.vstack([r.quantity_array().mean(axis=0) for r in self.levels_])
        self.quantity_stds_ = np.vstack([r.quantity_array().std(axis=0) for r in self.levels_])
        self.n_features_in_ = 2
        return self

    def transform(self, X=None):
        """Per-level mean quantities, shape ``(levels, 9)``."""
        check_is_fitted(self, "levels_")
        return self.quantity_means_

    def distribution_stats(self, kind, level=0):
        check_is_fitted(self, "levels_")
        return self.levels_[level].stats(kind)

    def scaling(self, threshold=DEFAULT_RESIDUAL_THRESHOLD):
        """Fit every quantity against window size.

        Returns ``{name: ScalingFit or None}``; None where some level has a
        zero mean and a power law is undefined.
        """
        check_is_fitted(self, "levels_")
        fits = {}
        for j, name in enumerate(QUANTITY_NAMES):
            means = self.quantity_means_[:, j]
            if np.any(means <= 0):
                fits[name] = None
                continue
            fits[name] = fit_scaling(
                self.window_sizes_, means, self.quantity_stds_[:, j], name, threshold
            )
        return fits

    def alignment(self, name, beta):
        """Dispersion of ``name / N_V`` across levels after scaling by ``(N_V/N_0)**beta``."""
        check_is_fitted(self, "levels_")
        curves = {
            int(r.window_size): r.quantity_array(name) / r.window_size for r in self.levels_
        }
        return alignment_check(curves, beta, int(self.window_sizes_[0]))


def _is_stream(X):
    return not isinstance(X, (np.ndarray, list, tuple)) and hasattr(X, "__iter__") and not hasattr(
        X, "to_numpy"
    )


class ScalingRegressor(RegressorMixin, BaseEstimator):
    """Power law ``y = 2**intercept_ * N_V**exponent_`` fitted in log2-log2 space.

    ``scaling_`` is False when the RMS log2 residual exceeds ``threshold``,
    i.e. no simple scaling relation describes the data.
    """

    def __init__(self, threshold=DEFAULT_RESIDUAL_THRESHOLD):
        self.threshold = threshold

    def fit(self, X, y):
        x = check_window_sizes(X)
        y = np.asarray(y, dtype=np.float64).ravel()
        order = np.argsort(x, kind="stable")
        self.fit_ = fit_scaling(x[order], y[order], threshold=self.threshold)
        self.exponent_ = self.fit_.exponent
        self.intercept_ = self.fit_.intercept
        self.residual_ = self.fit_.residual
        self.scaling_ = self.fit_.scaling
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return self.fit_.predict(check_window_sizes(X))


__all__ = [
    "MultiTemporalAnalyzer",
    "ScalingRegressor",
    "WindowQuantities",
]
