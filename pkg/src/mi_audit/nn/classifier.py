"""sklearn-style front end for the classifier engine."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ..validation import as_float_array, as_label_array, check_labels_in_range
from .model import Dense, ModelSpec, Relu, SoftmaxOutput, forward, spec_from_string
from .training import DpSgdConfig, TrainConfig, train, train_dpsgd


class NeuralNetClassifier(BaseEstimator, ClassifierMixin):
    """Small fully-deterministic neural network classifier.

    By default builds an MLP with the given hidden widths; pass
    ``architecture`` (a compact layer string such as
    ``"conv:4:3, relu, flatten, dense:16, relu, dense:10, softmax"``)
    for convolutional models. Setting ``noise_multiplier`` (with
    ``clip_norm``) switches training to DP-SGD.

    Follows the usual estimator conventions: hyperparameters in
    ``__init__``, fitted state in ``params_``, ``fit`` returns self.
    """

    def __init__(
        self,
        hidden=(32,),
        epochs=50,
        batch_size=32,
        learning_rate=0.1,
        l2_lambda=0.0,
        seed=0,
        architecture=None,
        clip_norm=None,
        noise_multiplier=None,
    ):
        self.hidden = hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.l2_lambda = l2_lambda
        self.seed = seed
        self.architecture = architecture
        self.clip_norm = clip_norm
        self.noise_multiplier = noise_multiplier

    def _build_spec(self, input_shape, num_classes) -> ModelSpec:
        if self.architecture is not None:
            return spec_from_string(input_shape, self.architecture)
        if len(input_shape) != 1:
            raise ValueError(
                "default MLP needs flat inputs; pass architecture= for images"
            )
        layers = []
        size = input_shape[0]
        for width in self.hidden:
            layers += [Dense(size, int(width)), Relu()]
            size = int(width)
        layers += [Dense(size, num_classes), SoftmaxOutput(num_classes)]
        return ModelSpec(input_shape, tuple(layers))

    def fit(self, X, y):
        X = as_float_array(X, "X")
        y = as_label_array(y, "y")
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} rows but y has {len(y)}")
        num_classes = int(y.max()) + 1 if len(y) else 0
        check_labels_in_range(y, num_classes)
        spec = self._build_spec(tuple(X.shape[1:]), num_classes)
        # duck-typed stand-in for a Dataset
        data = _FitData(X, y)
        if self.noise_multiplier is not None or self.clip_norm is not None:
            cfg = DpSgdConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                learning_rate=self.learning_rate,
                l2_lambda=self.l2_lambda,
                seed=self.seed,
                clip_norm=1.0 if self.clip_norm is None else self.clip_norm,
                noise_multiplier=self.noise_multiplier or 0.0,
            )
            self.params_ = train_dpsgd(spec, data, cfg)
        else:
            cfg = TrainConfig(
                epochs=self.epochs,
                batch_size=self.batch_size,
                learning_rate=self.learning_rate,
                l2_lambda=self.l2_lambda,
                seed=self.seed,
            )
            self.params_ = train(spec, data, cfg)
        self.classes_ = np.arange(num_classes)
        return self

    def predict_proba(self, X) -> np.ndarray:
        return forward(self.params_, as_float_array(X, "X"))

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def score(self, X, y) -> float:
        return float(np.mean(self.predict(X) == as_label_array(y, "y")))


class _FitData:
    def __init__(self, inputs, labels):
        self.inputs = inputs
        self.labels = labels
        self.soft_labels = None
