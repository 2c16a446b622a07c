"""Versioned JSON container for model parameters."""

from __future__ import annotations

import json
from pathlib import Path

from ..encoding import array_to_b64, b64_to_array
from ..errors import PreparedIOError
from .model import (
    Conv2d,
    Dense,
    Flatten,
    MaxPool,
    ModelParams,
    ModelSpec,
    Relu,
    SoftmaxOutput,
)

MODEL_FORMAT = "mi-audit-model"
MODEL_VERSION = 1


def layer_to_dict(layer) -> dict:
    if isinstance(layer, Dense):
        return {"kind": "dense", "in_size": layer.in_size, "out_size": layer.out_size}
    if isinstance(layer, Relu):
        return {"kind": "relu"}
    if isinstance(layer, Conv2d):
        return {
            "kind": "conv2d",
            "channels": layer.channels,
            "kernel": layer.kernel,
            "in_channels": layer.in_channels,
        }
    if isinstance(layer, MaxPool):
        return {"kind": "maxpool", "window": layer.window}
    if isinstance(layer, Flatten):
        return {"kind": "flatten"}
    if isinstance(layer, SoftmaxOutput):
        return {"kind": "softmax", "num_classes": layer.num_classes}
    raise TypeError(f"unknown layer {layer!r}")


def layer_from_dict(d: dict):
    kind = d["kind"]
    if kind == "dense":
        return Dense(d["in_size"], d["out_size"])
    if kind == "relu":
        return Relu()
    if kind == "conv2d":
        return Conv2d(d["channels"], d["kernel"], d["in_channels"])
    if kind == "maxpool":
        return MaxPool(d["window"])
    if kind == "flatten":
        return Flatten()
    if kind == "softmax":
        return SoftmaxOutput(d["num_classes"])
    raise PreparedIOError(f"unknown layer kind {kind!r}")


def spec_to_dict(spec: ModelSpec) -> dict:
    return {
        "input_shape": list(spec.input_shape),
        "layers": [layer_to_dict(l) for l in spec.layers],
    }


def spec_from_dict(d: dict) -> ModelSpec:
    return ModelSpec(
        tuple(d["input_shape"]), tuple(layer_from_dict(l) for l in d["layers"])
    )


def params_to_dict(params: ModelParams) -> dict:
    weights = []
    for w in params.weights:
        if w is None:
            weights.append(None)
        else:
            weights.append(
                {
                    "w": array_to_b64(w[0]),
                    "w_shape": list(w[0].shape),
                    "b": array_to_b64(w[1]),
                    "b_shape": list(w[1].shape),
                }
            )
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "spec": spec_to_dict(params.spec),
        "rng_seed": params.rng_seed,
        "weights": weights,
    }


def params_from_dict(d: dict) -> ModelParams:
    if d.get("format") != MODEL_FORMAT:
        raise PreparedIOError(f"not a {MODEL_FORMAT} container")
    if d.get("version") != MODEL_VERSION:
        raise PreparedIOError(
            f"unsupported model container version {d.get('version')!r}"
        )
    spec = spec_from_dict(d["spec"])
    weights = []
    for entry in d["weights"]:
        if entry is None:
            weights.append(None)
        else:
            weights.append(
                (
                    b64_to_array(entry["w"], entry["w_shape"]),
                    b64_to_array(entry["b"], entry["b_shape"]),
                )
            )
    return ModelParams(spec=spec, weights=weights, rng_seed=int(d["rng_seed"]))


def save_params(params: ModelParams, path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params), sort_keys=True), "utf-8")


def load_params(path) -> ModelParams:
    try:
        d = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as err:
        raise PreparedIOError(f"corrupt model file {path}: {err}") from err
    return params_from_dict(d)
