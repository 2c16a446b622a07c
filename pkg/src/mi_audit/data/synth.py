"""Synthetic Gaussian-blob datasets (desk-scale stand-in for image corpora)."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..seeding import derive_seed
from .dataset import Dataset

# Class centers stay inside this sub-cube so small spreads rarely clip.
_CENTER_LO, _CENTER_HI = 0.15, 0.85


def synth_blobs(
    num_classes: int, dims: int, spread: float, count: int, seed: int
) -> Dataset:
    """One Gaussian cluster per class, clipped to the unit hypercube.

    Labels are balanced within +-1; centers are drawn once per seed so
    train/test sets generated from the same seed share geometry (pass the
    same seed with a different `salt`).
    """
    return _blobs(num_classes, dims, spread, count, seed, salt="train")


def synth_blob_pair(
    num_classes: int, dims: int, spread: float, count: int, test_count: int, seed: int
) -> tuple[Dataset, Dataset]:
    """A (d_r, d_s) pair drawn around shared class centers."""
    return (
        _blobs(num_classes, dims, spread, count, seed, salt="train"),
        _blobs(num_classes, dims, spread, test_count, seed, salt="test"),
    )


def _blobs(num_classes, dims, spread, count, seed, salt) -> Dataset:
    if num_classes < 2:
        raise ConfigError(f"need num_classes >= 2, got {num_classes}")
    if spread < 0:
        raise ConfigError(f"spread must be >= 0, got {spread}")
    centers_rng = np.random.default_rng(derive_seed(seed, "blob-centers"))
    centers = centers_rng.uniform(_CENTER_LO, _CENTER_HI, size=(num_classes, dims))

    rng = np.random.default_rng(derive_seed(seed, "blob-points", salt))
    base, extra = divmod(count, num_classes)
    labels = np.concatenate(
        [np.full(base + (c < extra), c, dtype=np.int64) for c in range(num_classes)]
    )
    labels = labels[rng.permutation(count)]
    points = centers[labels] + rng.normal(0.0, spread, size=(count, dims)) if spread else centers[labels].copy()
    return Dataset(
        inputs=np.clip(points, 0.0, 1.0),
        labels=labels,
        num_classes=num_classes,
    )


def nearest_center_accuracy(data: Dataset, centers: np.ndarray) -> float:
    """Oracle accuracy of the nearest-centroid classifier (test helper)."""
    d2 = ((data.inputs[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return float(np.mean(d2.argmin(axis=1) == data.labels))


def blob_centers(num_classes: int, dims: int, seed: int) -> np.ndarray:
    """The centers synth_blobs would use for this seed."""
    rng = np.random.default_rng(derive_seed(seed, "blob-centers"))
    return rng.uniform(_CENTER_LO, _CENTER_HI, size=(num_classes, dims))
