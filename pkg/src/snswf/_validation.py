"""Lightweight input-validation helpers shared across modules."""

from __future__ import annotations

import numpy as np


def as_series(x, name: str = "x") -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_channel_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float64 array (n_channels x n_samples)."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_band(band, name: str = "band") -> tuple[float, float]:
    """Validate a (lo, hi) frequency band with lo < hi."""
    lo, hi = float(band[0]), float(band[1])
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError(f"{name} must be finite, got ({lo}, {hi})")
    if lo >= hi:
        raise ValueError(f"{name} must have lo < hi, got ({lo}, {hi})")
    return lo, hi
