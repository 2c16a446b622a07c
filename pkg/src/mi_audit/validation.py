"""Input-validation helpers used by the estimator layer and the data types."""

from __future__ import annotations

import numpy as np

PROB_ROW_TOL = 1e-9


def as_float_array(x, name: str = "array") -> np.ndarray:
    """Coerce to a finite float64 ndarray."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_label_array(y, name: str = "labels") -> np.ndarray:
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        cast = arr.astype(np.int64)
        if not np.array_equal(cast, arr):
            raise ValueError(f"{name} must be integers")
        arr = cast
    return arr.astype(np.int64)


def check_labels_in_range(y: np.ndarray, num_classes: int, name: str = "labels") -> None:
    if len(y) and (y.min() < 0 or y.max() >= num_classes):
        raise ValueError(
            f"{name} must lie in [0, {num_classes}), got range "
            f"[{y.min()}, {y.max()}]"
        )


def check_probability_rows(rows: np.ndarray, name: str = "probabilities") -> None:
    """Each row must be non-negative and sum to 1 within PROB_ROW_TOL."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {rows.shape}")
    if np.any(rows < 0):
        raise ValueError(f"{name} contains negative entries")
    sums = rows.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > PROB_ROW_TOL):
        worst = float(np.abs(sums - 1.0).max())
        raise ValueError(f"{name} rows must sum to 1 (max deviation {worst:.3e})")


def check_unit_interval(x: np.ndarray, name: str = "inputs") -> None:
    if len(x) and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got range [{x.min()}, {x.max()}]")
