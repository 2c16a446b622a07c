"""Preparation stage: shadow ensembles and per-subject statistics.

Five variants share the same output shape (PreparedVariables):

- flira:  N non-member shadows on fresh attacker draws; non-member
           Gaussian fit per subject.
- emia:   flira with each attacker draw soft-relabeled by the target.
- nlira:  N shared non-member shadows plus N member shadows per subject
           (the subject is added to the shadow's training set); both fits.
- amia:   N shadow pairs trained on attacker draws augmented with the two
           halves of a fresh subject bisection, so each pair provides every
           subject with one member and one non-member model; an i-FGSM
           perturbation is optimized per subject and all statistics are
           taken at x + delta_x.
- eamia:  amia with the attacker draws soft-relabeled (bisected subjects
           keep their ground-truth labels).

Preparation never touches SubjectSet.ground_truth; child seeds are derived
per (round, role), so results are independent of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..data.dataset import (
    Dataset,
    ExperimentSplit,
    SubjectSet,
    concat_datasets,
    random_bisect,
    sample_attacker_set,
    soft_relabel,
)
from ..errors import ConfigError, TrainingError
from ..nn.model import ModelSpec
from ..nn.training import TrainConfig, count_training_runs, train
from ..seeding import derive_seed
from .noise import NoiseBank, NoiseBankConfig, collect_noise_stats, make_noise_bank
from .perturbation import optimize_perturbation
from .stats import GaussianStats, fit_gaussian

PREPARED_ATTACKS = ("flira", "nlira", "emia", "amia", "eamia")

DEFAULT_NLIRA_CEILING = 2048


@dataclass
class ShadowEnsemble:
    """Trained shadow models with their roles.

    Offline attacks hold N models, all "nonmember". The adversarial
    attacks hold 2N models as N ("member-half-1", "member-half-2") pairs
    plus the bisection record that assigns, per subject and round, which
    half is the member model.
    """

    models: list
    kinds: list[str]  # "nonmember" | "member-half-1" | "member-half-2"
    bisections: list[np.ndarray] | None = None  # per round: first-half mask over subjects

    def __post_init__(self):
        if len(self.models) != len(self.kinds):
            raise ValueError("one kind per model required")
        if self.bisections is not None:
            if len(self.models) != 2 * len(self.bisections):
                raise ValueError(
                    f"paired ensemble needs 2 models per round, got "
                    f"{len(self.models)} models for {len(self.bisections)} rounds"
                )

    @property
    def n_rounds(self) -> int:
        return len(self.bisections) if self.bisections is not None else len(self.models)

    def pair(self, j: int):
        return self.models[2 * j], self.models[2 * j + 1]

    def roles_for_subject(self, i: int):
        """(member_models, nonmember_models, signs) for subject i.

        The sign is -1 when the subject fell in the first half of round j's
        bisection, +1 otherwise (bookkeeping only, no arithmetic hangs on it).
        """
        if self.bisections is None:
            raise ValueError("role assignment needs a paired ensemble")
        members, nonmembers, signs = [], [], []
        for j, in_first in enumerate(self.bisections):
            first, second = self.pair(j)
            if in_first[i]:
                members.append(first)
                nonmembers.append(second)
                signs.append(-1)
            else:
                members.append(second)
                nonmembers.append(first)
                signs.append(1)
        return members, nonmembers, np.asarray(signs, dtype=np.int64)


@dataclass
class SubjectRecord:
    """Per-subject prepared variables."""

    delta_x: np.ndarray
    nonmember_stats: GaussianStats
    member_stats: GaussianStats | None
    noise_nonmember: np.ndarray          # (p, N) raw phi values
    noise_member: np.ndarray | None      # (p, N) or None
    bisection_signs: np.ndarray | None   # (N,) of +-1; amia/eamia only


@dataclass
class PreparedVariables:
    attack: str
    epsilon: float
    noise_bank: NoiseBank
    records: list[SubjectRecord]
    metadata: dict = field(default_factory=dict)

    @property
    def has_member_stats(self) -> bool:
        return bool(self.records) and self.records[0].member_stats is not None

    @property
    def k(self) -> int:
        return len(self.records)


def _train_shadow(spec, data, base_cfg: TrainConfig, seed: int, round_j: int) -> "object":
    cfg = replace(base_cfg, seed=seed, batch_size=min(base_cfg.batch_size, len(data)))
    try:
        return train(spec, data, cfg)
    except TrainingError as err:
        raise TrainingError(f"shadow round {round_j} diverged: {err}", epoch=err.epoch) from err


def _subject_dataset(subjects: SubjectSet, indices, num_classes: int) -> Dataset:
    idx = np.asarray(indices, dtype=np.int64)
    return Dataset(
        inputs=subjects.inputs[idx],
        labels=subjects.labels[idx],
        num_classes=num_classes,
    )


def _check_n(n_shadows: int) -> None:
    if n_shadows < 2:
        raise ConfigError(f"need n_shadows >= 2, got {n_shadows}")


def _prepare_offline(
    attack: str,
    target,
    spec: ModelSpec,
    split: ExperimentSplit,
    subjects: SubjectSet,
    n_shadows: int,
    train_cfg: TrainConfig,
    seed: int,
    noise_cfg: NoiseBankConfig,
) -> PreparedVariables:
    _check_n(n_shadows)
    bank = make_noise_bank(spec.input_shape, noise_cfg, derive_seed(seed, "noise-bank"))
    with count_training_runs() as runs:
        models = []
        for j in range(n_shadows):
            d_a = sample_attacker_set(split, subjects.source_indices, seed, j)
            if attack == "emia":
                d_a = soft_relabel(d_a, target)
            models.append(
                _train_shadow(spec, d_a, train_cfg, derive_seed(seed, "shadow", j, "nonmember"), j)
            )
        ensemble = ShadowEnsemble(models, ["nonmember"] * n_shadows)
        records = []
        for i in range(subjects.k):
            zero = np.zeros_like(subjects.inputs[i])
            f_n, _ = collect_noise_stats(
                subjects.inputs[i], subjects.labels[i], zero, bank, ensemble.models
            )
            records.append(
                SubjectRecord(
                    delta_x=zero,
                    nonmember_stats=fit_gaussian(f_n[0]),
                    member_stats=None,
                    noise_nonmember=f_n,
                    noise_member=None,
                    bisection_signs=None,
                )
            )
        trained = runs.count
    return PreparedVariables(
        attack=attack,
        epsilon=0.0,
        noise_bank=bank,
        records=records,
        metadata={
            "seed": int(seed),
            "n_rounds": n_shadows,
            "k": subjects.k,
            "shadow_models_trained": trained,
        },
    )


def prepare_flira(
    target,
    spec: ModelSpec,
    split: ExperimentSplit,
    subjects: SubjectSet,
    n_shadows: int,
    train_cfg: TrainConfig,
    seed: int,
    noise_cfg: NoiseBankConfig = NoiseBankConfig(),
) -> PreparedVariables:
    """Offline preparation: N non-member shadows, per-subject non-member fit."""
    return _prepare_offline(
        "flira", target, spec, split, subjects, n_shadows, train_cfg, seed, noise_cfg
    )


def prepare_emia(
    target,
    spec: ModelSpec,
    split: ExperimentSplit,
    subjects: SubjectSet,
    n_shadows: int,
    train_cfg: TrainConfig,
    seed: int,
    noise_cfg: NoiseBankConfig = NoiseBankConfig(),
) -> PreparedVariables:
    """Offline preparation with target-soft-labeled attacker draws."""
    return _prepare_offline(
        "emia", target, spec, split, subjects, n_shadows, train_cfg, seed, noise_cfg
    )


def prepare_nlira(
    target,
    spec: ModelSpec,
    split: ExperimentSplit,
    subjects: SubjectSet,
    n_shadows: int,
    train_cfg: TrainConfig,
    seed: int,
    noise_cfg: NoiseBankConfig = NoiseBankConfig(),
    cost_ceiling: int = DEFAULT_NLIRA_CEILING,
) -> PreparedVariables:
    """Online preparation: N shared non-member shadows plus one member
    shadow per (subject, round) -- N*(k+1) trainings, so a cost guard
    refuses k*N above the ceiling."""
    _check_n(n_shadows)
    if subjects.k * n_shadows > cost_ceiling:
        raise ConfigError(
            f"nlira would train k*N = {subjects.k * n_shadows} member shadows, "
            f"above the ceiling {cost_ceiling}"
        )
    m = spec.num_classes
    bank = make_noise_bank(spec.input_shape, noise_cfg, derive_seed(seed, "noise-bank"))
    with count_training_runs() as runs:
        attacker_sets = [
            sample_attacker_set(split, subjects.source_indices, seed, j)
            for j in range(n_shadows)
        ]
        shared = ShadowEnsemble(
            [
                _train_shadow(
                    spec, attacker_sets[j], train_cfg,
                    derive_seed(seed, "shadow", j, "nonmember"), j,
                )
                for j in range(n_shadows)
            ],
            ["nonmember"] * n_shadows,
        )
        records = []
        for i in range(subjects.k):
            singleton = _subject_dataset(subjects, [i], m)
            members = [
                _train_shadow(
                    spec,
                    concat_datasets(attacker_sets[j], singleton),
                    train_cfg,
                    derive_seed(seed, "shadow", j, "member", i),
                    j,
                )
                for j in range(n_shadows)
            ]
            zero = np.zeros_like(subjects.inputs[i])
            f_n, f_m = collect_noise_stats(
                subjects.inputs[i], subjects.labels[i], zero, bank, shared.models, members
            )
            records.append(
                SubjectRecord(
                    delta_x=zero,
                    nonmember_stats=fit_gaussian(f_n[0]),
                    member_stats=fit_gaussian(f_m[0]),
                    noise_nonmember=f_n,
                    noise_member=f_m,
                    bisection_signs=None,
                )
            )
        trained = runs.count
    return PreparedVariables(
        attack="nlira",
        epsilon=0.0,
        noise_bank=bank,
        records=records,
        metadata={
            "seed": int(seed),
            "n_rounds": n_shadows,
            "k": subjects.k,
            "shadow_models_trained": trained,
        },
    )


def _prepare_adversarial(
    attack: str,
    target,
    spec: ModelSpec,
    split: ExperimentSplit,
    subjects: SubjectSet,
    n_shadows: int,
    train_cfg: TrainConfig,
    epsilon: float,
    fgsm_steps: int,
    seed: int,
    noise_cfg: NoiseBankConfig,
) -> PreparedVariables:
    _check_n(n_shadows)
    if subjects.k < 2:
        raise ConfigError("adversarial preparation needs k >= 2 to bisect subjects")
    m = spec.num_classes
    bank = make_noise_bank(spec.input_shape, noise_cfg, derive_seed(seed, "noise-bank"))
    with count_training_runs() as runs:
        models, kinds, bisections = [], [], []
        for j in range(n_shadows):
            d_a = sample_attacker_set(split, subjects.source_indices, seed, j)
            if attack == "eamia":
                d_a = soft_relabel(d_a, target)
            e1, e2 = random_bisect(subjects.k, seed, j)
            mask = np.zeros(subjects.k, dtype=bool)
            mask[e1] = True
            if mask[e2].any():
                raise RuntimeError(f"bisection round {j} halves overlap")
            models.append(
                _train_shadow(
                    spec,
                    concat_datasets(d_a, _subject_dataset(subjects, e1, m)),
                    train_cfg,
                    derive_seed(seed, "shadow", j, "m1"),
                    j,
                )
            )
            kinds.append("member-half-1")
            models.append(
                _train_shadow(
                    spec,
                    concat_datasets(d_a, _subject_dataset(subjects, e2, m)),
                    train_cfg,
                    derive_seed(seed, "shadow", j, "m2"),
                    j,
                )
            )
            kinds.append("member-half-2")
            bisections.append(mask)
        ensemble = ShadowEnsemble(models, kinds, bisections)

        records = []
        for i in range(subjects.k):
            member_models, nonmember_models, signs = ensemble.roles_for_subject(i)
            delta = optimize_perturbation(
                subjects.inputs[i],
                int(subjects.labels[i]),
                member_models,
                nonmember_models,
                epsilon,
                fgsm_steps,
            )
            f_n, f_m = collect_noise_stats(
                subjects.inputs[i],
                subjects.labels[i],
                delta,
                bank,
                nonmember_models,
                member_models,
            )
            records.append(
                SubjectRecord(
                    delta_x=delta,
                    nonmember_stats=fit_gaussian(f_n[0]),
                    member_stats=fit_gaussian(f_m[0]),
                    noise_nonmember=f_n,
                    noise_member=f_m,
                    bisection_signs=signs,
                )
            )
        trained = runs.count
    return PreparedVariables(
        attack=attack,
        epsilon=float(epsilon),
        noise_bank=bank,
        records=records,
        metadata={
            "seed": int(seed),
            "n_rounds": n_shadows,
            "k": subjects.k,
            "fgsm_steps": int(fgsm_steps),
            "shadow_models_trained": trained,
        },
    )


def prepare_amia(
    target,
    spec: ModelSpec,
    split: ExperimentSplit,
    subjects: SubjectSet,
    n_shadows: int,
    train_cfg: TrainConfig,
    epsilon: float = 0.02,
    fgsm_steps: int = 10,
    seed: int = 0,
    noise_cfg: NoiseBankConfig = NoiseBankConfig(),
) -> PreparedVariables:
    """Adversarial preparation: 2N shadows in N bisection pairs, per-subject
    i-FGSM perturbation, member and non-member fits at x + delta_x."""
    return _prepare_adversarial(
        "amia", target, spec, split, subjects, n_shadows, train_cfg,
        epsilon, fgsm_steps, seed, noise_cfg,
    )


def prepare_eamia(
    target,
    spec: ModelSpec,
    split: ExperimentSplit,
    subjects: SubjectSet,
    n_shadows: int,
    train_cfg: TrainConfig,
    epsilon: float = 0.02,
    fgsm_steps: int = 10,
    seed: int = 0,
    noise_cfg: NoiseBankConfig = NoiseBankConfig(),
) -> PreparedVariables:
    """AMIA with the attacker portion soft-relabeled by the target."""
    return _prepare_adversarial(
        "eamia", target, spec, split, subjects, n_shadows, train_cfg,
        epsilon, fgsm_steps, seed, noise_cfg,
    )


PREPARE_FUNCTIONS = {
    "flira": prepare_flira,
    "nlira": prepare_nlira,
    "emia": prepare_emia,
    "amia": prepare_amia,
    "eamia": prepare_eamia,
}


def expected_shadow_count(attack: str, n_shadows: int, k: int) -> int:
    """Training budget per attack: N, N*(k+1), or 2N."""
    if attack in ("flira", "emia"):
        return n_shadows
    if attack == "nlira":
        return n_shadows * (k + 1)
    if attack in ("amia", "eamia"):
        return 2 * n_shadows
    raise ConfigError(f"unknown attack {attack!r}")
