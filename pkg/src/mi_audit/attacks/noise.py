"""Gaussian noise banks for the augmented indicators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..indicators import as_predict_fn, phi


@dataclass(frozen=True)
class NoiseBankConfig:
    """p noise tensors, the first identically zero, the rest i.i.d.
    Gaussian(0, sigma_noise) per coordinate."""

    p: int = 1
    sigma_noise: float = 0.0

    def __post_init__(self):
        if self.p < 1:
            raise ConfigError(f"noise count p must be >= 1, got {self.p}")
        if self.sigma_noise < 0:
            raise ConfigError(f"sigma_noise must be >= 0, got {self.sigma_noise}")


@dataclass
class NoiseBank:
    noises: np.ndarray  # (p, *input_shape); noises[0] == 0
    sigma_noise: float
    seed: int

    @property
    def p(self) -> int:
        return len(self.noises)


def make_noise_bank(input_shape, cfg: NoiseBankConfig, seed: int) -> NoiseBank:
    noises = np.zeros((cfg.p, *input_shape))
    if cfg.p > 1 and cfg.sigma_noise > 0:
        rng = np.random.default_rng(seed)
        noises[1:] = rng.normal(0.0, cfg.sigma_noise, size=(cfg.p - 1, *input_shape))
    return NoiseBank(noises=noises, sigma_noise=cfg.sigma_noise, seed=int(seed))


def collect_noise_stats(
    x: np.ndarray,
    y: int,
    delta_x: np.ndarray,
    bank: NoiseBank,
    nonmember_models,
    member_models=None,
):
    """Raw phi banks around the (possibly perturbed) subject.

    Returns (F_n, F_m) arrays of shape (p, #models); F_m is None when no
    member models are given. Noise index 0 reproduces the unnoised
    statistic exactly since the zero noise is stored literally. Queries are
    not re-clipped to [0, 1]: the indication stage evaluates the target at
    these same points.
    """
    queries = (np.asarray(x, dtype=np.float64) + delta_x)[None, ...] + bank.noises

    def phi_bank(models) -> np.ndarray:
        cols = [phi(as_predict_fn(m)(queries)[:, int(y)]) for m in models]
        return np.stack(cols, axis=1)  # (p, len(models))

    f_n = phi_bank(nonmember_models)
    f_m = phi_bank(member_models) if member_models is not None else None
    return f_n, f_m
