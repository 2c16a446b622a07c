"""Gaussian fits of shadow statistics."""

import math

import numpy as np
import pytest

from mi_audit.attacks import SIGMA_FLOOR, GaussianStats, fit_gaussian


class TestFitGaussian:
    def test_hand_computed_one_two_three(self):
        stats = fit_gaussian([1.0, 2.0, 3.0])
        assert stats.mu == 2.0
        assert stats.sigma == 1.0  # ddof=1: sqrt((1 + 0 + 1) / 2)
        assert stats.n_samples == 3

    def test_hand_computed_symmetric_pair(self):
        stats = fit_gaussian([-1.0, 1.0])
        assert stats.mu == 0.0
        assert stats.sigma == pytest.approx(math.sqrt(2.0), abs=1e-15)

    def test_degenerate_values_hit_floor(self):
        stats = fit_gaussian([5.0, 5.0, 5.0])
        assert stats.mu == 5.0
        assert stats.sigma == SIGMA_FLOOR

    def test_fewer_than_two_rejected(self):
        with pytest.raises(ValueError):
            fit_gaussian([1.0])
        with pytest.raises(ValueError):
            fit_gaussian([])

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            fit_gaussian([1.0, np.inf])

    def test_matches_numpy_ddof1(self):
        rng = np.random.default_rng(0)
        values = rng.normal(3.0, 2.5, size=50)
        stats = fit_gaussian(values)
        assert stats.mu == float(np.mean(values))
        assert stats.sigma == float(np.std(values, ddof=1))

    def test_stats_invariants_enforced(self):
        with pytest.raises(ValueError):
            GaussianStats(mu=0.0, sigma=0.0, n_samples=3)
        with pytest.raises(ValueError):
            GaussianStats(mu=0.0, sigma=1.0, n_samples=1)
