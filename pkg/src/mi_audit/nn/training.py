"""SGD training with L2 regularization, plus the DP-SGD variant.

train() is a pure function of (spec, data, config): initialization and the
per-epoch batch order come from streams derived from config.seed, so repeated
invocations are bit-identical regardless of call ordering elsewhere. Every
completed call bumps a process-wide counter that the attack-accounting tests
read.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from ..errors import ConfigError, NumericalError, TrainingError
from ..seeding import derive_seed
from .model import ModelParams, ModelSpec, cross_entropy_loss, grad_params, init_params

if TYPE_CHECKING:  # pragma: no cover
    from ..data.dataset import Dataset


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int
    learning_rate: float
    l2_lambda: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.l2_lambda < 0:
            raise ConfigError(f"l2_lambda must be >= 0, got {self.l2_lambda}")

    # dataclasses.replace() is the intended way to derive seeded/clamped copies;
    # it preserves the DpSgdConfig subclass.


@dataclass(frozen=True)
class DpSgdConfig(TrainConfig):
    clip_norm: float = 1.0
    noise_multiplier: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be > 0, got {self.clip_norm}")
        if self.noise_multiplier < 0:
            raise ConfigError(f"noise_multiplier must be >= 0, got {self.noise_multiplier}")


_TRAIN_CALLS = 0


def _record_training_run() -> None:
    global _TRAIN_CALLS
    _TRAIN_CALLS += 1


def training_run_count() -> int:
    return _TRAIN_CALLS


class _RunTracker:
    def __init__(self, start: int):
        self._start = start

    @property
    def count(self) -> int:
        return _TRAIN_CALLS - self._start


@contextmanager
def count_training_runs():
    """Track train()/train_dpsgd() invocations inside the block via .count."""
    yield _RunTracker(_TRAIN_CALLS)


def _training_targets(data: "Dataset"):
    return data.soft_labels if data.soft_labels is not None else data.labels


def _check_trainable(data, cfg: TrainConfig) -> int:
    n = len(data.inputs)
    if n == 0:
        raise ConfigError("cannot train on an empty dataset")
    if cfg.batch_size > n:
        raise ConfigError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    return n


def _sgd_step(params: ModelParams, grads, lr: float) -> None:
    for w, g in zip(params.weights, grads):
        if w is not None:
            weight, bias = w
            weight -= lr * g[0]
            bias -= lr * g[1]


def train(spec: ModelSpec, data: "Dataset", cfg: TrainConfig) -> ModelParams:
    """Mini-batch SGD on cross-entropy (soft rows when present) + L2."""
    n = _check_trainable(data, cfg)
    _record_training_run()
    params = init_params(spec, derive_seed(cfg.seed, "init"))
    targets = np.asarray(_training_targets(data))
    order = np.random.default_rng(derive_seed(cfg.seed, "order"))
    for epoch in range(cfg.epochs):
        perm = order.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            try:
                grads, loss = grad_params(params, data.inputs[idx], targets[idx], cfg.l2_lambda)
            except NumericalError as err:
                raise TrainingError(f"training diverged: {err}", epoch=epoch) from err
            if not np.isfinite(loss):
                raise TrainingError("training diverged: non-finite loss", epoch=epoch)
            _sgd_step(params, grads, cfg.learning_rate)
    return params


def clip_to_norm(grads, clip_norm: float):
    """Rescale one sample's gradient list so its global L2 norm is <= clip_norm.

    Returns (clipped_grads, clipped_norm).
    """
    sq = sum(float((g[0] ** 2).sum() + (g[1] ** 2).sum()) for g in grads if g is not None)
    norm = np.sqrt(sq)
    if norm <= clip_norm or norm == 0.0:
        return grads, norm
    factor = clip_norm / norm
    return (
        [None if g is None else (g[0] * factor, g[1] * factor) for g in grads],
        clip_norm,
    )


def dp_noise_std(noise_multiplier: float, clip_norm: float, batch_size: int) -> float:
    return noise_multiplier * clip_norm / batch_size


def train_dpsgd(
    spec: ModelSpec,
    data: "Dataset",
    cfg: DpSgdConfig,
    clip_hook: Callable[[list[float]], None] | None = None,
) -> ModelParams:
    """DP-SGD: per-sample clipping to clip_norm, Gaussian noise on the mean.

    Each per-sample gradient is rescaled to L2 norm <= C before averaging;
    noise with std noise_multiplier*C/batch is added per coordinate. The L2
    weight-decay term is data-independent and applied after the mechanism,
    so noise_multiplier=0 with a slack clip bound reproduces plain SGD
    exactly. `clip_hook`, when given, receives each batch's post-clip norms
    (instrumentation for the clipping contract).
    """
    n = _check_trainable(data, cfg)
    _record_training_run()
    params = init_params(spec, derive_seed(cfg.seed, "init"))
    targets = np.asarray(_training_targets(data))
    order = np.random.default_rng(derive_seed(cfg.seed, "order"))
    noise_rng = np.random.default_rng(derive_seed(cfg.seed, "dp-noise"))
    for epoch in range(cfg.epochs):
        perm = order.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            batch = len(idx)
            acc = [
                None if w is None else [np.zeros_like(w[0]), np.zeros_like(w[1])]
                for w in params.weights
            ]
            norms = []
            for i in idx:
                try:
                    grads, loss = grad_params(
                        params, data.inputs[i : i + 1], targets[i : i + 1], 0.0
                    )
                except NumericalError as err:
                    raise TrainingError(f"training diverged: {err}", epoch=epoch) from err
                if not np.isfinite(loss):
                    raise TrainingError("training diverged: non-finite loss", epoch=epoch)
                grads, norm = clip_to_norm(grads, cfg.clip_norm)
                norms.append(norm)
                for a, g in zip(acc, grads):
                    if a is not None:
                        a[0] += g[0]
                        a[1] += g[1]  # acc entries are [array, array] lists
            if clip_hook is not None:
                clip_hook(norms)
            std = dp_noise_std(cfg.noise_multiplier, cfg.clip_norm, batch)
            update = []
            for a, w in zip(acc, params.weights):
                if a is None:
                    update.append(None)
                    continue
                gw, gb = a[0] / batch, a[1] / batch
                if std > 0.0:
                    gw = gw + noise_rng.normal(0.0, std, size=gw.shape)
                    gb = gb + noise_rng.normal(0.0, std, size=gb.shape)
                if cfg.l2_lambda:
                    gw = gw + cfg.l2_lambda * w[0]
                update.append((gw, gb))
            _sgd_step(params, update, cfg.learning_rate)
    return params


def accuracy(model, data: "Dataset") -> float:
    """Fraction of argmax-correct predictions; refuses an empty set."""
    if len(data.inputs) == 0:
        raise ValueError("accuracy is undefined on an empty dataset")
    from ..indicators import as_predict_fn

    probs = as_predict_fn(model)(data.inputs)
    return float(np.mean(probs.argmax(axis=1) == data.labels))


def dataset_loss(params: ModelParams, data: "Dataset", l2_lambda: float = 0.0) -> float:
    return cross_entropy_loss(params, data.inputs, _training_targets(data), l2_lambda)
