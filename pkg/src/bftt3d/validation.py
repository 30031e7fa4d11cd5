"""Input validation helpers used by the estimators and the file layer."""

from __future__ import annotations

import numpy as np

from .errors import NumericError


def check_cloud(points, *, name: str = "cloud") -> np.ndarray:
    """Validate an (N, 3) coordinate array and return it as float64.

    Requires N >= 1 and all coordinates finite.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must contain at least one point")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return arr


def check_features(X, *, name: str = "features", min_rows: int = 1) -> np.ndarray:
    """Validate a 2-D feature matrix and return it as float64."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} row(s), got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


def check_labels(y, n_classes: int | None = None, *, name: str = "labels") -> np.ndarray:
    """Validate an integer class-label vector; labels must be in [0, n_classes)."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        as_int = arr.astype(np.int64)
        if not np.array_equal(as_int, arr):
            raise ValueError(f"{name} must be integers")
        arr = as_int
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError(f"{name} contains negative class ids")
    if n_classes is not None and arr.size and arr.max() >= n_classes:
        raise ValueError(f"{name} contains class id >= {n_classes}")
    return arr


def check_logits(l, *, name: str = "logits") -> np.ndarray:
    """Validate a finite 1-D logit vector and return it as float64."""
    arr = np.asarray(l, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr
