"""Input-validation helpers shared by the estimator classes."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError


def as_float_array(x, name: str = "x", min_samples: int = 0) -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting NaN/inf values."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size < min_samples:
        raise ValueError(f"{name} needs at least {min_samples} values, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_float_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 matrix, rejecting NaN/inf values."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_consistent_length(X, y) -> None:
    if len(X) != len(y):
        raise ValueError(f"inconsistent lengths: X has {len(X)} rows, y has {len(y)}")


def check_fitted(estimator, attribute: str) -> None:
    """Raise NotFittedError unless `attribute` is set on the estimator."""
    if getattr(estimator, attribute, None) is None:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )
