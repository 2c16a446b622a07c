"""Estimator-facing API of the classifier."""

import numpy as np
import pytest
from sklearn.base import clone

from mi_audit.data import synth_blobs
from mi_audit.nn import NeuralNetClassifier


def _xy(seed=1, count=60, spread=0.05):
    # seed 1 gives well-separated centers (distance ~0.78 in 4 dims)
    data = synth_blobs(num_classes=2, dims=4, spread=spread, count=count, seed=seed)
    return data.inputs, data.labels


class TestEstimatorApi:
    def test_fit_returns_self_and_sets_state(self):
        X, y = _xy()
        clf = NeuralNetClassifier(hidden=(8,), epochs=20, learning_rate=0.5, seed=1)
        assert clf.fit(X, y) is clf
        assert hasattr(clf, "params_")
        assert list(clf.classes_) == [0, 1]

    def test_get_set_params_round_trip(self):
        clf = NeuralNetClassifier(hidden=(8,), epochs=3, seed=5)
        params = clf.get_params()
        assert params["epochs"] == 3 and params["seed"] == 5
        clf.set_params(epochs=9)
        assert clf.epochs == 9

    def test_clone_preserves_hyperparameters(self):
        clf = NeuralNetClassifier(hidden=(4, 4), l2_lambda=0.01, seed=2)
        other = clone(clf)
        assert other.get_params() == clf.get_params()

    def test_predict_proba_rows_normalized(self):
        X, y = _xy()
        clf = NeuralNetClassifier(hidden=(8,), epochs=10, seed=0).fit(X, y)
        probs = clf.predict_proba(X)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert probs.shape == (len(X), 2)

    def test_score_on_separable_data(self):
        X, y = _xy(spread=0.03)
        clf = NeuralNetClassifier(hidden=(8,), epochs=40, learning_rate=0.5, seed=3)
        assert clf.fit(X, y).score(X, y) >= 0.99

    def test_seed_determinism(self):
        X, y = _xy()
        a = NeuralNetClassifier(hidden=(6,), epochs=5, seed=7).fit(X, y)
        b = NeuralNetClassifier(hidden=(6,), epochs=5, seed=7).fit(X, y)
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))

    def test_architecture_string_for_images(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(30, 6, 6, 1))
        y = rng.integers(0, 2, size=30)
        clf = NeuralNetClassifier(
            architecture="conv:2:3, relu, maxpool:2, flatten, dense:2, softmax",
            epochs=2,
            batch_size=10,
            seed=0,
        ).fit(X, y)
        assert clf.predict(X).shape == (30,)

    def test_mismatched_lengths_rejected(self):
        X, y = _xy()
        with pytest.raises(ValueError):
            NeuralNetClassifier(epochs=1).fit(X, y[:-1])

    def test_dp_training_path(self):
        X, y = _xy(count=24)
        clf = NeuralNetClassifier(
            hidden=(4,), epochs=2, batch_size=8, seed=0,
            clip_norm=1.0, noise_multiplier=0.5,
        ).fit(X, y)
        assert np.all(np.isfinite(clf.predict_proba(X)))
