"""Minimal differentiable classifier: forward pass and analytic gradients.

Layers are plain descriptors; parameters live in ModelParams. Everything is
float64 -- the logit-ratio statistics downstream operate near saturation and
the finite-difference gradient contracts (rel. error <= 1e-4 at h = 1e-5)
need the headroom. Images are channels-last: (n, h, w, c).

The softmax output layer is treated as the terminal normalization: backward
passes start from gradients w.r.t. the pre-softmax logits, which is where
both the cross-entropy and the logit-confidence objectives are cheapest and
most stable to differentiate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import NumericalError
from ..indicators import phi, phi_derivative


@dataclass(frozen=True)
class Dense:
    in_size: int
    out_size: int


@dataclass(frozen=True)
class Relu:
    pass


@dataclass(frozen=True)
class Conv2d:
    channels: int
    kernel: int
    in_channels: int


@dataclass(frozen=True)
class MaxPool:
    window: int


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class SoftmaxOutput:
    num_classes: int


Layer = Union[Dense, Relu, Conv2d, MaxPool, Flatten, SoftmaxOutput]

TRAINABLE = (Dense, Conv2d)


def _output_shape(layer: Layer, in_shape: tuple[int, ...]) -> tuple[int, ...]:
    if isinstance(layer, Dense):
        if in_shape != (layer.in_size,):
            raise ValueError(f"dense({layer.in_size},{layer.out_size}) cannot follow shape {in_shape}")
        return (layer.out_size,)
    if isinstance(layer, Relu):
        return in_shape
    if isinstance(layer, Conv2d):
        if len(in_shape) != 3 or in_shape[2] != layer.in_channels:
            raise ValueError(f"conv2d expects (h, w, {layer.in_channels}), got {in_shape}")
        h, w, _ = in_shape
        k = layer.kernel
        if h < k or w < k:
            raise ValueError(f"conv2d kernel {k} larger than input {in_shape}")
        return (h - k + 1, w - k + 1, layer.channels)
    if isinstance(layer, MaxPool):
        if len(in_shape) != 3:
            raise ValueError(f"maxpool expects (h, w, c), got {in_shape}")
        h, w, c = in_shape
        s = layer.window
        if h % s or w % s:
            raise ValueError(f"maxpool window {s} must divide spatial dims {in_shape[:2]}")
        return (h // s, w // s, c)
    if isinstance(layer, Flatten):
        return (int(np.prod(in_shape)),)
    if isinstance(layer, SoftmaxOutput):
        if in_shape != (layer.num_classes,):
            raise ValueError(f"softmax-output({layer.num_classes}) cannot follow shape {in_shape}")
        return in_shape
    raise TypeError(f"unknown layer {layer!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description: input shape plus an ordered layer list."""

    input_shape: tuple[int, ...]
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers or not isinstance(self.layers[-1], SoftmaxOutput):
            raise ValueError("final layer must be softmax-output")
        if sum(isinstance(l, SoftmaxOutput) for l in self.layers) != 1:
            raise ValueError("exactly one softmax-output layer allowed")
        if not any(isinstance(l, TRAINABLE) for l in self.layers):
            raise ValueError("need at least one trainable layer")
        shape = self.input_shape
        for layer in self.layers:
            shape = _output_shape(layer, shape)  # raises on bad composition

    @property
    def num_classes(self) -> int:
        return self.layers[-1].num_classes

    def shapes(self) -> list[tuple[int, ...]]:
        """Per-layer output shapes, starting with the input shape."""
        out = [self.input_shape]
        for layer in self.layers:
            out.append(_output_shape(layer, out[-1]))
        return out


def spec_from_string(input_shape: Sequence[int], text: str) -> ModelSpec:
    """Build a ModelSpec from a compact layer string.

    Example: ``"conv:4:3, relu, maxpool:2, flatten, dense:32, relu,
    dense:10, softmax"``. Dense input sizes, conv input channels, and the
    softmax class count are inferred from the running shape.
    """
    shape = tuple(int(d) for d in input_shape)
    layers: list[Layer] = []
    for token in text.split(","):
        parts = [p.strip() for p in token.strip().split(":")]
        kind, args = parts[0], parts[1:]
        if kind == "dense":
            (out_size,) = map(int, args)
            if len(shape) != 1:
                raise ValueError(f"dense layer needs a flat input, have shape {shape}")
            layers.append(Dense(shape[0], out_size))
        elif kind == "relu":
            layers.append(Relu())
        elif kind == "conv":
            channels, kernel = map(int, args)
            if len(shape) != 3:
                raise ValueError(f"conv layer needs (h, w, c) input, have shape {shape}")
            layers.append(Conv2d(channels, kernel, in_channels=shape[2]))
        elif kind == "maxpool":
            (window,) = map(int, args)
            layers.append(MaxPool(window))
        elif kind == "flatten":
            layers.append(Flatten())
        elif kind == "softmax":
            layers.append(SoftmaxOutput(num_classes=shape[0]))
        else:
            raise ValueError(f"unknown layer token {token.strip()!r}")
        shape = _output_shape(layers[-1], shape)
    return ModelSpec(tuple(int(d) for d in input_shape), tuple(layers))


@dataclass
class ModelParams:
    """Trained (or initial) weights for a ModelSpec.

    ``weights[i]`` is a (W, b) pair for trainable layer i, else None.
    """

    spec: ModelSpec
    weights: list[tuple[np.ndarray, np.ndarray] | None]
    rng_seed: int

    def copy(self) -> "ModelParams":
        return ModelParams(
            spec=self.spec,
            weights=[None if w is None else (w[0].copy(), w[1].copy()) for w in self.weights],
            rng_seed=self.rng_seed,
        )

    def num_params(self) -> int:
        return sum(w[0].size + w[1].size for w in self.weights if w is not None)

    def predict_proba(self, batch: np.ndarray) -> np.ndarray:
        return forward(self, batch)


def init_params(spec: ModelSpec, seed: int) -> ModelParams:
    """Glorot-uniform weights, zero biases, drawn from a seeded stream."""
    rng = np.random.default_rng(seed)
    weights: list[tuple[np.ndarray, np.ndarray] | None] = []
    for layer in spec.layers:
        if isinstance(layer, Dense):
            s = np.sqrt(6.0 / (layer.in_size + layer.out_size))
            w = rng.uniform(-s, s, size=(layer.in_size, layer.out_size))
            weights.append((w, np.zeros(layer.out_size)))
        elif isinstance(layer, Conv2d):
            k = layer.kernel
            fan_in = k * k * layer.in_channels
            fan_out = k * k * layer.channels
            s = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-s, s, size=(k, k, layer.in_channels, layer.channels))
            weights.append((w, np.zeros(layer.channels)))
        else:
            weights.append(None)
    return ModelParams(spec=spec, weights=weights, rng_seed=int(seed))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _layer_forward(layer: Layer, w, x: np.ndarray) -> np.ndarray:
    if isinstance(layer, Dense):
        return x @ w[0] + w[1]
    if isinstance(layer, Relu):
        return np.maximum(x, 0.0)
    if isinstance(layer, Conv2d):
        windows = sliding_window_view(x, (layer.kernel, layer.kernel), axis=(1, 2))
        # windows: (n, oh, ow, c, k, k); kernel W: (k, k, c, f)
        return np.einsum("nxyckl,klcf->nxyf", windows, w[0]) + w[1]
    if isinstance(layer, MaxPool):
        n, h, wd, c = x.shape
        s = layer.window
        return x.reshape(n, h // s, s, wd // s, s, c).max(axis=(2, 4))
    if isinstance(layer, Flatten):
        return x.reshape(x.shape[0], -1)
    raise TypeError(f"unexpected layer {layer!r}")


def _layer_backward(layer: Layer, w, x: np.ndarray, dout: np.ndarray):
    """Returns (dx, dW, db); dW/db are None for parameter-free layers."""
    if isinstance(layer, Dense):
        return dout @ w[0].T, x.T @ dout, dout.sum(axis=0)
    if isinstance(layer, Relu):
        return dout * (x > 0.0), None, None
    if isinstance(layer, Conv2d):
        k = layer.kernel
        windows = sliding_window_view(x, (k, k), axis=(1, 2))
        dW = np.einsum("nxyckl,nxyf->klcf", windows, dout)
        db = dout.sum(axis=(0, 1, 2))
        dx = np.zeros_like(x)
        oh, ow = dout.shape[1], dout.shape[2]
        for a in range(k):
            for b in range(k):
                dx[:, a : a + oh, b : b + ow, :] += np.einsum(
                    "nxyf,cf->nxyc", dout, w[0][a, b]
                )
        return dx, dW, db
    if isinstance(layer, MaxPool):
        n, h, wd, c = x.shape
        s = layer.window
        oh, ow = h // s, wd // s
        tiles = (
            x.reshape(n, oh, s, ow, s, c)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(n, oh, ow, c, s * s)
        )
        winners = tiles.argmax(axis=-1)  # first max wins on ties
        dtiles = np.zeros_like(tiles)
        np.put_along_axis(dtiles, winners[..., None], dout[..., None], axis=-1)
        dx = (
            dtiles.reshape(n, oh, ow, c, s, s)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(n, h, wd, c)
        )
        return dx, None, None
    if isinstance(layer, Flatten):
        return dout.reshape(x.shape), None, None
    raise TypeError(f"unexpected layer {layer!r}")


def _logits_cached(params: ModelParams, batch: np.ndarray):
    """Forward up to the pre-softmax logits, keeping each layer's input."""
    x = np.asarray(batch, dtype=np.float64)
    if x.shape[1:] != params.spec.input_shape:
        raise ValueError(
            f"batch shape {x.shape[1:]} does not match model input "
            f"{params.spec.input_shape}"
        )
    caches = []
    for layer, w in zip(params.spec.layers, params.weights):
        if isinstance(layer, SoftmaxOutput):
            break
        caches.append(x)
        x = _layer_forward(layer, w, x)
    return x, caches


def forward(params: ModelParams, batch: np.ndarray) -> np.ndarray:
    """Probability rows for a batch; each row sums to 1 within 1e-9."""
    logits, _ = _logits_cached(params, batch)
    return softmax(logits)


def _backward_from_logits(params: ModelParams, caches, dlogits: np.ndarray, want_param_grads: bool):
    """Backpropagate a logits gradient; returns (dx, grads-aligned-list)."""
    grads = [None] * len(params.spec.layers) if want_param_grads else None
    d = dlogits
    body = [
        (i, layer, w)
        for i, (layer, w) in enumerate(zip(params.spec.layers, params.weights))
        if not isinstance(layer, SoftmaxOutput)
    ]
    for (i, layer, w), x in zip(reversed(body), reversed(caches)):
        d, dW, db = _layer_backward(layer, w, x, d)
        if want_param_grads and dW is not None:
            grads[i] = (dW, db)
    return d, grads


def _target_rows(targets, num_classes: int) -> np.ndarray:
    t = np.asarray(targets)
    if t.ndim == 1:
        if t.min() < 0 or t.max() >= num_classes:
            raise ValueError(f"labels must lie in [0, {num_classes})")
        return np.eye(num_classes)[t.astype(np.int64)]
    if t.ndim == 2 and t.shape[1] == num_classes:
        return t.astype(np.float64)
    raise ValueError(f"targets must be labels or (n, {num_classes}) rows, got shape {t.shape}")


def _first_nonfinite_layer(caches, logits) -> int:
    for i, x in enumerate(caches[1:] + [logits]):
        if not np.all(np.isfinite(x)):
            return i
    return len(caches)


def grad_params(params: ModelParams, batch: np.ndarray, targets, l2_lambda: float = 0.0):
    """Gradients of mean cross-entropy + (l2/2)*||weights||^2.

    `targets` may be integer labels or soft probability rows. Returns
    (grads, loss) with grads aligned to params.weights; the L2 term covers
    weight matrices only, never biases.
    """
    logits, caches = _logits_cached(params, batch)
    t = _target_rows(targets, params.spec.num_classes)
    n = len(logits)
    loss = float(-(t * log_softmax(logits)).sum() / n)
    if l2_lambda:
        loss += 0.5 * l2_lambda * sum(
            float((w[0] ** 2).sum()) for w in params.weights if w is not None
        )
    if not np.isfinite(loss):
        raise NumericalError(
            "non-finite loss in forward pass",
            layer_index=_first_nonfinite_layer(caches, logits),
        )
    dlogits = (softmax(logits) - t) / n
    _, grads = _backward_from_logits(params, caches, dlogits, want_param_grads=True)
    if l2_lambda:
        grads = [
            None if g is None else (g[0] + l2_lambda * w[0], g[1])
            for g, w in zip(grads, params.weights)
        ]
    return grads, loss


def cross_entropy_loss(params: ModelParams, batch: np.ndarray, targets, l2_lambda: float = 0.0) -> float:
    """Loss value only (same objective as grad_params)."""
    logits, _ = _logits_cached(params, batch)
    t = _target_rows(targets, params.spec.num_classes)
    loss = float(-(t * log_softmax(logits)).sum() / len(logits))
    if l2_lambda:
        loss += 0.5 * l2_lambda * sum(
            float((w[0] ** 2).sum()) for w in params.weights if w is not None
        )
    return loss


def phi_value_and_input_grad(params: ModelParams, x: np.ndarray, y: int):
    """phi(f(x)[y]) and its gradient w.r.t. the input x.

    Where the probability clamp saturates the gradient is exactly zero
    (finite by construction, matching the clamped objective).
    """
    batch = np.asarray(x, dtype=np.float64)[None, ...]
    logits, caches = _logits_cached(params, batch)
    probs = softmax(logits)
    q = float(probs[0, int(y)])
    value = phi(q)
    # d phi / d logits = phi'(q) * q * (onehot_y - p)
    scale = phi_derivative(q) * q
    dlogits = -scale * probs
    dlogits[0, int(y)] += scale
    dx, _ = _backward_from_logits(params, caches, dlogits, want_param_grads=False)
    return value, dx[0]


def phi_objective(terms, x: np.ndarray, y: int):
    """Value and input gradient of a signed sum of phi terms.

    `terms` is a sequence of (weight, ModelParams); the objective is
    sum_i weight_i * phi(f_i(x)[y]).
    """
    value = 0.0
    grad = np.zeros_like(np.asarray(x, dtype=np.float64))
    for weight, model in terms:
        v, g = phi_value_and_input_grad(model, x, y)
        value += weight * v
        grad += weight * g
    return value, grad


def one_hot(labels: np.ndarray, num_classes: int) -> np.ndarray:
    return np.eye(num_classes)[np.asarray(labels, dtype=np.int64)]
