from .estimators import (
    AmiaAttack,
    EAmiaAttack,
    EmiaAttack,
    FLiraAttack,
    NLiraAttack,
)
from .io import load_prepared, prepared_from_dict, prepared_to_dict, save_prepared
from .noise import NoiseBank, NoiseBankConfig, collect_noise_stats, make_noise_bank
from .perturbation import optimize_perturbation, perturbation_objective
from .prepare import (
    DEFAULT_NLIRA_CEILING,
    PREPARE_FUNCTIONS,
    PREPARED_ATTACKS,
    PreparedVariables,
    ShadowEnsemble,
    SubjectRecord,
    expected_shadow_count,
    prepare_amia,
    prepare_eamia,
    prepare_emia,
    prepare_flira,
    prepare_nlira,
)
from .stats import SIGMA_FLOOR, GaussianStats, fit_gaussian

__all__ = [
    "AmiaAttack",
    "DEFAULT_NLIRA_CEILING",
    "EAmiaAttack",
    "EmiaAttack",
    "FLiraAttack",
    "GaussianStats",
    "NLiraAttack",
    "NoiseBank",
    "NoiseBankConfig",
    "PREPARED_ATTACKS",
    "PREPARE_FUNCTIONS",
    "PreparedVariables",
    "SIGMA_FLOOR",
    "ShadowEnsemble",
    "SubjectRecord",
    "collect_noise_stats",
    "expected_shadow_count",
    "fit_gaussian",
    "load_prepared",
    "make_noise_bank",
    "optimize_perturbation",
    "perturbation_objective",
    "prepare_amia",
    "prepare_eamia",
    "prepare_emia",
    "prepare_flira",
    "prepare_nlira",
    "prepared_from_dict",
    "prepared_to_dict",
    "save_prepared",
]
