"""mi-audit: membership-inference auditing at desk scale.

Shadow-model attack preparation (offline/online likelihood-ratio attacks,
soft-label and adversarial-perturbation variants), likelihood-ratio
indicators over Gaussian noise neighborhoods, and low-FPR evaluation
metrics, all driven by a deterministic experiment harness.

The estimator layer is the intended entry point::

    from mi_audit import NeuralNetClassifier, AmiaAttack

    target = NeuralNetClassifier(hidden=(64,), epochs=150).fit(X, y)
    attack = AmiaAttack(n_shadows=8, epsilon=0.02).fit(target, split, subjects)
    scores = attack.score_subjects(target, subjects, indicator="lr_n")
"""

from .attacks import (
    AmiaAttack,
    EAmiaAttack,
    EmiaAttack,
    FLiraAttack,
    GaussianStats,
    NLiraAttack,
    NoiseBankConfig,
    PreparedVariables,
    fit_gaussian,
    load_prepared,
    optimize_perturbation,
    save_prepared,
)
from .data import (
    Dataset,
    ExperimentSplit,
    SubjectSet,
    load_idx_dataset,
    make_split,
    parse_idx,
    random_bisect,
    sample_attacker_set,
    sample_subjects,
    soft_relabel,
    synth_blobs,
)
from .harness import (
    ExperimentConfig,
    RunRecord,
    load_config,
    run_attack_experiment,
    run_dpsgd_eval,
    run_sweep,
    run_transferability,
)
from .indicators import (
    IndicatorScore,
    decide,
    lr_offline,
    lr_online,
    phi,
    score_subjects,
)
from .metrics import RocCurve, RtaCurve, roc, rta, rta_curve, summary_metrics, tpr_at_fpr
from .nn import (
    DpSgdConfig,
    ModelParams,
    ModelSpec,
    NeuralNetClassifier,
    TrainConfig,
    accuracy,
    forward,
    train,
    train_dpsgd,
)

__version__ = "0.1.0"

__all__ = [
    "AmiaAttack",
    "Dataset",
    "DpSgdConfig",
    "EAmiaAttack",
    "EmiaAttack",
    "ExperimentConfig",
    "ExperimentSplit",
    "FLiraAttack",
    "GaussianStats",
    "IndicatorScore",
    "ModelParams",
    "ModelSpec",
    "NLiraAttack",
    "NeuralNetClassifier",
    "NoiseBankConfig",
    "PreparedVariables",
    "RocCurve",
    "RtaCurve",
    "RunRecord",
    "SubjectSet",
    "TrainConfig",
    "accuracy",
    "decide",
    "fit_gaussian",
    "forward",
    "load_config",
    "load_idx_dataset",
    "load_prepared",
    "lr_offline",
    "lr_online",
    "make_split",
    "optimize_perturbation",
    "parse_idx",
    "phi",
    "random_bisect",
    "roc",
    "rta",
    "rta_curve",
    "run_attack_experiment",
    "run_dpsgd_eval",
    "run_sweep",
    "run_transferability",
    "sample_attacker_set",
    "sample_subjects",
    "save_prepared",
    "score_subjects",
    "soft_relabel",
    "summary_metrics",
    "synth_blobs",
    "tpr_at_fpr",
    "train",
    "train_dpsgd",
]
