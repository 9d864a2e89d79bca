"""Input checks shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .matrix import as_record_array
from .quantities import QUADRANTS, InternalSet, QuadrantSpec


def check_records(X):
    """Validate packet records and return them as an ``(n, 2)`` uint64 array."""
    if hasattr(X, "to_numpy"):
        X = X.to_numpy()
    arr = np.asarray(X) if not isinstance(X, np.ndarray) else X
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)):
            raise ValueError("records contain NaN or infinity")
        if np.any(arr != np.floor(arr)):
            raise ValueError("records must hold integer IDs")
        if arr.size and (arr.min() < 0 or arr.max() >= 2.0**64):
            raise ValueError("packet IDs must lie in [0, 2**64)")
        arr = arr.astype(np.uint64)
    return as_record_array(arr)


def check_power_of_two(n, name="window"):
    n = int(n)
    if n < 2 or n & (n - 1):
        raise ValueError(f"{name} must be a power of two >= 2, got {n}")
    return n


def check_internal(internal):
    if internal is None or hasattr(internal, "contains"):
        return internal
    if isinstance(internal, str):
        return InternalSet.parse(internal)
    if isinstance(internal, tuple) and len(internal) == 2 and np.isscalar(internal[0]):
        return InternalSet(ranges=[internal])
    return InternalSet(ids=internal)


def check_quadrant(quadrant, internal):
    """Build a :class:`QuadrantSpec`, or None when no quadrant is requested."""
    if quadrant is None:
        return None
    if quadrant not in QUADRANTS:
        raise ValueError(f"quadrant must be one of {QUADRANTS} or None, got {quadrant!r}")
    internal = check_internal(internal)
    if internal is None:
        raise ValueError("a quadrant needs an internal set")
    return QuadrantSpec(internal, quadrant)


def check_window_sizes(X):
    x = np.asarray(X, dtype=np.float64)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError("window sizes must be a single feature")
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError("window sizes must be 1-d")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("window sizes must be positive")
    return x
