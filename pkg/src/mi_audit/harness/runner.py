"""End-to-end experiment orchestration.

Every stage seeds itself from the master seed via labeled derivation, so a
RunRecord's emitted artifacts are a pure function of the config (wall-clock
timings stay in memory and never reach the output files). Transfer and
DP-SGD evaluations rebuild the data/split/subjects deterministically from
the config, reuse saved prepared variables, and train only the unknown
models -- never preparation-stage shadows.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..attacks.io import load_prepared
from ..attacks.noise import NoiseBankConfig
from ..attacks.prepare import (
    PreparedVariables,
    prepare_amia,
    prepare_eamia,
    prepare_emia,
    prepare_flira,
    prepare_nlira,
)
from ..data.dataset import Dataset, ExperimentSplit, SubjectSet, make_split, sample_subjects
from ..data.idx import load_idx_dataset
from ..data.synth import synth_blob_pair
from ..errors import ConfigError
from ..indicators import indicator_compatible, score_subjects
from ..metrics import summary_metrics
from ..nn.model import ModelParams, ModelSpec, spec_from_string
from ..nn.training import DpSgdConfig, TrainConfig, accuracy, train, train_dpsgd
from ..seeding import derive_seed
from .config import ExperimentConfig, with_sweep_value
from .report import emit_report


@dataclass
class TransferResult:
    """Scores of one unknown model against reused prepared variables."""

    training: str  # "l2" or "dpsgd"
    model_index: int
    scores: dict = field(default_factory=dict)  # (attack, indicator) -> (k,) array


@dataclass
class RunRecord:
    config: ExperimentConfig
    kind: str = "attack"
    target_train_accuracy: float | None = None
    target_test_accuracy: float | None = None
    ground_truth: np.ndarray | None = None
    scores: dict = field(default_factory=dict)      # (attack, indicator) -> (k,)
    summaries: dict = field(default_factory=dict)   # (attack, indicator) -> metrics
    prepared: dict = field(default_factory=dict)    # attack -> PreparedVariables
    transfer_results: list = field(default_factory=list)
    sweep_rows: list = field(default_factory=list)
    children: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)   # name -> Path
    mechanism: dict | None = None                   # dp-eval metadata
    failure: str | None = None


@dataclass
class ExperimentContext:
    """Deterministically derived experiment state."""

    cfg: ExperimentConfig
    split: ExperimentSplit
    spec: ModelSpec
    subjects: SubjectSet
    target: ModelParams | None = None


def _load_data(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    if cfg.source == "synthetic":
        return synth_blob_pair(
            cfg.num_classes, cfg.dims, cfg.spread, cfg.train_count, cfg.test_count,
            seed=derive_seed(cfg.seed, "data"),
        )
    d_r = load_idx_dataset(cfg.train_images, cfg.train_labels)
    d_s = load_idx_dataset(cfg.test_images, cfg.test_labels)
    m = max(d_r.num_classes, d_s.num_classes)
    d_r.num_classes = d_s.num_classes = m
    return d_r, d_s


def _base_train_cfg(cfg: ExperimentConfig, seed: int = 0) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        l2_lambda=cfg.l2_lambda,
        seed=seed,
    )


def build_context(cfg: ExperimentConfig, with_target: bool = True) -> ExperimentContext:
    d_r, d_s = _load_data(cfg)
    split = make_split(d_r, d_s, derive_seed(cfg.seed, "split"))
    spec = spec_from_string(d_r.inputs.shape[1:], cfg.layers)
    if spec.num_classes != d_r.num_classes:
        raise ConfigError(
            f"model emits {spec.num_classes} classes but data has {d_r.num_classes}"
        )
    subjects = sample_subjects(split, cfg.k, derive_seed(cfg.seed, "subjects"))
    target = None
    if with_target:
        target = train(spec, split.d_t, _base_train_cfg(cfg, derive_seed(cfg.seed, "target")))
    return ExperimentContext(cfg=cfg, split=split, spec=spec, subjects=subjects, target=target)


def prepare_attack(
    cfg: ExperimentConfig, attack: str, ctx: ExperimentContext
) -> PreparedVariables:
    noise = NoiseBankConfig(p=cfg.noise_count, sigma_noise=cfg.noise_sigma)
    base = _base_train_cfg(cfg)
    seed = derive_seed(cfg.seed, "prepare", attack)
    common = (ctx.target, ctx.spec, ctx.split, ctx.subjects, cfg.n_shadows, base)
    if attack == "flira":
        prepared = prepare_flira(*common, seed, noise)
    elif attack == "emia":
        prepared = prepare_emia(*common, seed, noise)
    elif attack == "nlira":
        prepared = prepare_nlira(*common, seed, noise, cost_ceiling=cfg.nlira_ceiling)
    elif attack == "amia":
        prepared = prepare_amia(*common, cfg.epsilon, cfg.fgsm_steps, seed, noise)
    elif attack == "eamia":
        prepared = prepare_eamia(*common, cfg.epsilon, cfg.fgsm_steps, seed, noise)
    else:
        raise ConfigError(f"unknown attack {attack!r}")
    prepared.metadata["config_snapshot"] = cfg.to_flat_dict()
    return prepared


def _score_pairs(model, subjects, prepared_map, cfg) -> dict:
    out = {}
    for attack in cfg.attacks:
        for indicator in cfg.indicators:
            if indicator_compatible(attack, indicator):
                out[(attack, indicator)] = score_subjects(
                    model, subjects, prepared_map[attack], indicator, z=cfg.z
                )
    return out


def run_attack_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Train the target, prepare every attack, score every compatible
    indicator, and emit the report. Stage failures are annotated on the
    (partial) record rather than raised."""
    cfg.validate()
    record = RunRecord(config=cfg, kind="attack")
    try:
        t0 = time.perf_counter()
        ctx = build_context(cfg)
        record.timings["setup"] = time.perf_counter() - t0
        record.target_train_accuracy = accuracy(ctx.target, ctx.split.d_t)
        record.target_test_accuracy = accuracy(ctx.target, ctx.split.d_s)
        record.ground_truth = ctx.subjects.ground_truth
        for attack in cfg.attacks:
            t0 = time.perf_counter()
            record.prepared[attack] = prepare_attack(cfg, attack, ctx)
            record.timings[f"prepare.{attack}"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        record.scores = _score_pairs(ctx.target, ctx.subjects, record.prepared, cfg)
        record.summaries = {
            key: summary_metrics(scores, record.ground_truth)
            for key, scores in record.scores.items()
        }
        record.timings["score"] = time.perf_counter() - t0
        record.artifacts = emit_report(record, cfg.out_dir)
    except Exception as err:  # partial record with failure annotation
        record.failure = f"{type(err).__name__}: {err}"
    return record


def _load_prepared_map(cfg: ExperimentConfig, prepared) -> dict:
    if prepared is not None:
        missing = [a for a in cfg.attacks if a not in prepared]
        if missing:
            raise ConfigError(f"prepared variables missing for: {missing}")
        return {a: prepared[a] for a in cfg.attacks}
    out = {}
    for attack in cfg.attacks:
        path = Path(cfg.out_dir) / f"prepared_{attack}.json"
        if not path.exists():
            raise ConfigError(
                f"no prepared variables for {attack!r}: {path} does not exist "
                "(run the attack experiment first or pass them in memory)"
            )
        out[attack] = load_prepared(path)
    return out


def run_transferability(
    cfg: ExperimentConfig, n_unknown: int = 10, prepared: dict | None = None
) -> RunRecord:
    """Re-score the subjects against n_unknown freshly trained models on the
    same training half, reusing the prepared variables untouched."""
    cfg.validate()
    record = RunRecord(config=cfg, kind="transfer")
    try:
        prepared_map = _load_prepared_map(cfg, prepared)
        ctx = build_context(cfg, with_target=False)
        record.ground_truth = ctx.subjects.ground_truth
        for u in range(n_unknown):
            t0 = time.perf_counter()
            model = train(
                ctx.spec,
                ctx.split.d_t,
                _base_train_cfg(cfg, derive_seed(cfg.seed, "unknown", u)),
            )
            scores = _score_pairs(model, ctx.subjects, prepared_map, cfg)
            record.timings[f"unknown.{u}"] = time.perf_counter() - t0
            record.transfer_results.append(
                TransferResult(training="l2", model_index=u, scores=scores)
            )
        record.artifacts = emit_report(record, cfg.out_dir)
    except Exception as err:
        record.failure = f"{type(err).__name__}: {err}"
    return record


def run_dpsgd_eval(
    cfg: ExperimentConfig,
    clip_norm: float,
    noise_multiplier: float,
    n_unknown: int = 10,
    prepared: dict | None = None,
    declared_budget: dict | None = None,
) -> RunRecord:
    """Transferability against DP-SGD-trained unknown models, reported
    alongside the plain (L2-regularized) baseline. `declared_budget` is
    recorded as metadata only; the mechanism is parameterized directly by
    (clip_norm, noise_multiplier)."""
    cfg.validate()
    record = RunRecord(config=cfg, kind="dp-eval")
    try:
        prepared_map = _load_prepared_map(cfg, prepared)
        ctx = build_context(cfg, with_target=False)
        record.ground_truth = ctx.subjects.ground_truth
        dp_base = DpSgdConfig(
            epochs=cfg.epochs,
            batch_size=cfg.batch_size,
            learning_rate=cfg.learning_rate,
            l2_lambda=cfg.l2_lambda,
            clip_norm=clip_norm,
            noise_multiplier=noise_multiplier,
        )
        for u in range(n_unknown):
            model = train(
                ctx.spec,
                ctx.split.d_t,
                _base_train_cfg(cfg, derive_seed(cfg.seed, "unknown", u)),
            )
            record.transfer_results.append(
                TransferResult(
                    training="l2",
                    model_index=u,
                    scores=_score_pairs(model, ctx.subjects, prepared_map, cfg),
                )
            )
        # same unknown-model seed lineage as the baseline: model u is the
        # same model trained with DP-SGD instead of plain SGD+L2
        for u in range(n_unknown):
            model = train_dpsgd(
                ctx.spec,
                ctx.split.d_t,
                replace(dp_base, seed=derive_seed(cfg.seed, "unknown", u)),
            )
            record.transfer_results.append(
                TransferResult(
                    training="dpsgd",
                    model_index=u,
                    scores=_score_pairs(model, ctx.subjects, prepared_map, cfg),
                )
            )
        record.mechanism = {"clip_norm": clip_norm, "noise_multiplier": noise_multiplier}
        if declared_budget:
            record.mechanism["declared_budget"] = dict(declared_budget)
        record.artifacts = emit_report(record, cfg.out_dir)
    except Exception as err:
        record.failure = f"{type(err).__name__}: {err}"
    return record


def run_sweep(cfg: ExperimentConfig, param: str, values) -> RunRecord:
    """One full experiment per parameter value under a shared master seed."""
    values = list(values)
    if len(values) < 2:
        raise ConfigError(f"sweep needs >= 2 values, got {len(values)}")
    cfg.validate()
    record = RunRecord(config=cfg, kind="sweep")
    for value in values:
        sub = with_sweep_value(cfg, param, value)
        sub = replace(sub, out_dir=str(Path(cfg.out_dir) / f"{param}_{value}"))
        child = run_attack_experiment(sub)
        record.children.append(child)
        if child.failure is not None:
            record.sweep_rows.append(
                {"param": param, "value": value, "failure": child.failure}
            )
            continue
        for (attack, indicator), summary in child.summaries.items():
            record.sweep_rows.append(
                {
                    "param": param,
                    "value": value,
                    "attack": attack,
                    "indicator": indicator,
                    **summary,
                }
            )
    record.artifacts = emit_report(record, cfg.out_dir)
    return record
