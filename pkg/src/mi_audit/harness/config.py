"""Experiment configuration: flat key=value sections, UTF-8.

The on-disk format is INI-style (stdlib configparser): ``[data]``,
``[model]``, ``[train]``, ``[attack]``, ``[run]`` sections of plain
key = value lines, trivially diffable. Validation happens before any
compute: unknown attacks/indicators, incompatible pairs, and size
inconsistencies are all rejected up front.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from ..errors import ConfigError
from ..indicators import INDICATOR_KINDS, indicator_compatible
from ..attacks.prepare import DEFAULT_NLIRA_CEILING, PREPARED_ATTACKS


@dataclass
class ExperimentConfig:
    # [data]
    source: str = "synthetic"
    num_classes: int = 2
    dims: int = 16
    spread: float = 0.3
    train_count: int = 320
    test_count: int = 80
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    # [model]
    layers: str = "dense:64, relu, dense:2, softmax"
    # [train]
    epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 0.25
    l2_lambda: float = 1e-4
    # [attack]
    attacks: tuple[str, ...] = ("amia", "flira")
    indicators: tuple[str, ...] = ("lr_n", "lr_f")
    n_shadows: int = 8
    k: int = 50
    epsilon: float = 0.02
    fgsm_steps: int = 10
    noise_count: int = 4
    noise_sigma: float = 0.02
    z: int = 2
    nlira_ceiling: int = DEFAULT_NLIRA_CEILING
    # [run]
    seed: int = 1
    out_dir: str = "runs/out"

    def validate(self) -> None:
        if self.source not in ("synthetic", "idx"):
            raise ConfigError(f"data source must be 'synthetic' or 'idx', got {self.source!r}")
        if self.source == "idx":
            for key in ("train_images", "train_labels", "test_images", "test_labels"):
                if not getattr(self, key):
                    raise ConfigError(f"idx source requires [data] {key}")
        if not self.attacks:
            raise ConfigError("attack list is empty")
        for a in self.attacks:
            if a not in PREPARED_ATTACKS:
                raise ConfigError(f"unknown attack {a!r} (choose from {PREPARED_ATTACKS})")
        if not self.indicators:
            raise ConfigError("indicator list is empty")
        for ind in self.indicators:
            if ind not in INDICATOR_KINDS:
                raise ConfigError(f"unknown indicator {ind!r} (choose from {INDICATOR_KINDS})")
        for a in self.attacks:
            if not any(indicator_compatible(a, i) for i in self.indicators):
                bad = ", ".join(self.indicators)
                raise ConfigError(
                    f"attack {a!r} has no compatible indicator among [{bad}]: "
                    "lr_n/lr_o need member statistics"
                )
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.n_shadows < 2:
            raise ConfigError(f"n_shadows must be >= 2, got {self.n_shadows}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.noise_count < 1:
            raise ConfigError(f"noise_count must be >= 1, got {self.noise_count}")
        if not 1 <= self.z <= self.noise_count:
            raise ConfigError(f"z must be in [1, noise_count={self.noise_count}], got {self.z}")

    def pairs(self) -> list[tuple[str, str]]:
        """Requested (attack, indicator) pairs, filtered to compatible ones."""
        return [
            (a, i)
            for a in self.attacks
            for i in self.indicators
            if indicator_compatible(a, i)
        ]

    def to_flat_dict(self) -> dict:
        d = {}
        for name in self.__dataclass_fields__:
            value = getattr(self, name)
            d[name] = list(value) if isinstance(value, tuple) else value
        return d


_SECTIONS = {
    "data": (
        "source", "num_classes", "dims", "spread", "train_count", "test_count",
        "train_images", "train_labels", "test_images", "test_labels",
    ),
    "model": ("layers",),
    "train": ("epochs", "batch_size", "learning_rate", "l2_lambda"),
    "attack": (
        "attacks", "indicators", "n_shadows", "k", "epsilon", "fgsm_steps",
        "noise_count", "noise_sigma", "z", "nlira_ceiling",
    ),
    "run": ("seed", "out_dir"),
}

_INT_FIELDS = {
    "num_classes", "dims", "train_count", "test_count", "epochs", "batch_size",
    "n_shadows", "k", "fgsm_steps", "noise_count", "z", "nlira_ceiling", "seed",
}
_FLOAT_FIELDS = {"spread", "learning_rate", "l2_lambda", "epsilon", "noise_sigma"}
_LIST_FIELDS = {"attacks", "indicators"}


def config_from_dict(values: dict) -> ExperimentConfig:
    kwargs = {}
    for key, raw in values.items():
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            if key in _LIST_FIELDS:
                if isinstance(raw, str):
                    raw = tuple(s.strip() for s in raw.split(",") if s.strip())
                else:
                    raw = tuple(raw)
            elif key in _INT_FIELDS:
                raw = int(raw)
            elif key in _FLOAT_FIELDS:
                raw = float(raw)
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({err})") from err
        kwargs[key] = raw
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        text = Path(path).read_text("utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"cannot parse config {path}: {err}") from err
    values: dict = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[key] = raw
    return config_from_dict(values)


# Sweep parameter names; N is accepted as the shadow-count alias.
SWEEP_PARAMS = {
    "epsilon": "epsilon",
    "sigma_noise": "noise_sigma",
    "noise_sigma": "noise_sigma",
    "N": "n_shadows",
    "n_shadows": "n_shadows",
}


def with_sweep_value(cfg: ExperimentConfig, param: str, value) -> ExperimentConfig:
    if param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {sorted(set(SWEEP_PARAMS))}, got {param!r}")
    name = SWEEP_PARAMS[param]
    try:
        value = int(value) if name in _INT_FIELDS else float(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad sweep value {value!r} for {param}: {err}") from err
    out = replace(cfg, **{name: value})
    out.validate()
    return out
