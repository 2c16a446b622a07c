"""Estimator-style front end for the attacks.

Each attack follows the familiar conventions: hyperparameters in the
constructor, ``fit(target, split, subjects)`` runs the preparation stage
and stores ``prepared_``, ``score_subjects`` runs the indication stage
(against the fitted target or any other model -- that is the
transferability knob), and ``predict`` thresholds into membership bits.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ..errors import ConfigError
from ..indicators import decide, indicator_compatible, score_subjects
from ..nn.model import ModelParams, ModelSpec
from ..nn.training import TrainConfig
from .noise import NoiseBankConfig
from .prepare import (
    DEFAULT_NLIRA_CEILING,
    prepare_amia,
    prepare_eamia,
    prepare_emia,
    prepare_flira,
    prepare_nlira,
)


def _spec_of(target, spec: ModelSpec | None) -> ModelSpec:
    if spec is not None:
        return spec
    if isinstance(target, ModelParams):
        return target.spec
    params = getattr(target, "params_", None)
    if isinstance(params, ModelParams):
        return params.spec
    raise ConfigError(
        "cannot infer a shadow-model spec from the target; pass spec= explicitly"
    )


class _ShadowAttack(BaseEstimator):
    """Shared plumbing; subclasses set _attack and _prepare."""

    _attack = ""

    def __init__(
        self,
        n_shadows=8,
        train_config=None,
        noise_count=1,
        noise_sigma=0.0,
        seed=0,
        spec=None,
    ):
        self.n_shadows = n_shadows
        self.train_config = train_config
        self.noise_count = noise_count
        self.noise_sigma = noise_sigma
        self.seed = seed
        self.spec = spec

    def _noise_cfg(self) -> NoiseBankConfig:
        return NoiseBankConfig(p=self.noise_count, sigma_noise=self.noise_sigma)

    def _train_cfg(self) -> TrainConfig:
        if self.train_config is None:
            return TrainConfig(epochs=30, batch_size=32, learning_rate=0.1)
        return self.train_config

    def _run_prepare(self, target, split, subjects):
        raise NotImplementedError

    def fit(self, target, split, subjects):
        """Preparation stage. `target` is the audited model (queried
        black-box); shadows share its architecture unless spec= says
        otherwise."""
        self.prepared_ = self._run_prepare(target, split, subjects)
        return self

    def score_subjects(self, target, subjects, indicator="lr_f", z=None) -> np.ndarray:
        if not indicator_compatible(self._attack, indicator):
            raise ConfigError(f"indicator {indicator!r} is incompatible with {self._attack}")
        return score_subjects(target, subjects, self.prepared_, indicator, z=z)

    def predict(self, target, subjects, tau, indicator="lr_f", z=None) -> np.ndarray:
        return decide(self.score_subjects(target, subjects, indicator, z=z), tau)


class FLiraAttack(_ShadowAttack):
    """Offline likelihood-ratio attack (non-member shadows only)."""

    _attack = "flira"

    def _run_prepare(self, target, split, subjects):
        return prepare_flira(
            target, _spec_of(target, self.spec), split, subjects,
            self.n_shadows, self._train_cfg(), self.seed, self._noise_cfg(),
        )


class EmiaAttack(_ShadowAttack):
    """Offline attack with target-soft-labeled shadow training sets."""

    _attack = "emia"

    def _run_prepare(self, target, split, subjects):
        return prepare_emia(
            target, _spec_of(target, self.spec), split, subjects,
            self.n_shadows, self._train_cfg(), self.seed, self._noise_cfg(),
        )


class NLiraAttack(_ShadowAttack):
    """Online likelihood-ratio attack; trains per-subject member shadows."""

    _attack = "nlira"

    def __init__(
        self,
        n_shadows=4,
        train_config=None,
        noise_count=1,
        noise_sigma=0.0,
        seed=0,
        spec=None,
        cost_ceiling=DEFAULT_NLIRA_CEILING,
    ):
        super().__init__(n_shadows, train_config, noise_count, noise_sigma, seed, spec)
        self.cost_ceiling = cost_ceiling

    def _run_prepare(self, target, split, subjects):
        return prepare_nlira(
            target, _spec_of(target, self.spec), split, subjects,
            self.n_shadows, self._train_cfg(), self.seed, self._noise_cfg(),
            cost_ceiling=self.cost_ceiling,
        )


class AmiaAttack(_ShadowAttack):
    """Adversarial membership inference: 2N paired shadows + i-FGSM."""

    _attack = "amia"
    _prepare_fn = staticmethod(prepare_amia)

    def __init__(
        self,
        n_shadows=8,
        train_config=None,
        noise_count=1,
        noise_sigma=0.0,
        seed=0,
        spec=None,
        epsilon=0.02,
        fgsm_steps=10,
    ):
        super().__init__(n_shadows, train_config, noise_count, noise_sigma, seed, spec)
        self.epsilon = epsilon
        self.fgsm_steps = fgsm_steps

    def _run_prepare(self, target, split, subjects):
        return self._prepare_fn(
            target, _spec_of(target, self.spec), split, subjects,
            self.n_shadows, self._train_cfg(),
            epsilon=self.epsilon, fgsm_steps=self.fgsm_steps,
            seed=self.seed, noise_cfg=self._noise_cfg(),
        )


class EAmiaAttack(AmiaAttack):
    """AMIA with soft-labeled attacker draws."""

    _attack = "eamia"
    _prepare_fn = staticmethod(prepare_eamia)
