from .config import ExperimentConfig, config_from_dict, load_config, with_sweep_value
from .report import emit_report
from .runner import (
    ExperimentContext,
    RunRecord,
    TransferResult,
    build_context,
    prepare_attack,
    run_attack_experiment,
    run_dpsgd_eval,
    run_sweep,
    run_transferability,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentContext",
    "RunRecord",
    "TransferResult",
    "build_context",
    "config_from_dict",
    "emit_report",
    "load_config",
    "prepare_attack",
    "run_attack_experiment",
    "run_dpsgd_eval",
    "run_sweep",
    "run_transferability",
    "with_sweep_value",
]
