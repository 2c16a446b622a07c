"""Gaussian fits of shadow-model statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Degenerate-ensemble guard: identical shadows would otherwise give sigma = 0
# and break the density ratios.
SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class GaussianStats:
    mu: float
    sigma: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError(f"need >= 2 samples, got {self.n_samples}")
        if self.sigma < SIGMA_FLOOR:
            raise ValueError(f"sigma {self.sigma} below floor {SIGMA_FLOOR}")


def fit_gaussian(values) -> GaussianStats:
    """Sample mean and sample (ddof=1) standard deviation, sigma-floored."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or len(arr) < 2:
        raise ValueError(f"need a flat list of >= 2 values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot fit a Gaussian to non-finite values")
    sigma = float(np.std(arr, ddof=1))
    return GaussianStats(
        mu=float(np.mean(arr)),
        sigma=max(sigma, SIGMA_FLOOR),
        n_samples=len(arr),
    )
