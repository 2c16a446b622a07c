"""Command-line entry point.

    mi-audit run      --config cfg.ini [--out DIR] [--seed U64]
    mi-audit sweep    --config cfg.ini --param epsilon --values 0.01,0.02,0.04
    mi-audit transfer --prepared PATH [--n-unknown 10] [--out DIR]
    mi-audit dp-eval  --prepared PATH --clip C --noise SIGMA [--n-unknown 10]

`transfer` and `dp-eval` accept either a prepared_*.json file or a run
directory containing them; the embedded config snapshot drives the
deterministic rebuild of the data, split, and subjects.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..attacks.io import load_prepared
from ..errors import ConfigError, PreparedIOError
from .config import ExperimentConfig, config_from_dict, load_config
from .runner import run_attack_experiment, run_dpsgd_eval, run_sweep, run_transferability


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "out", None):
        cfg = replace(cfg, out_dir=args.out)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _load_prepared_arg(path_arg: str):
    """Prepared map + reconstructed config from a file or run directory."""
    path = Path(path_arg)
    files = sorted(path.glob("prepared_*.json")) if path.is_dir() else [path]
    if not files:
        raise ConfigError(f"no prepared_*.json files under {path}")
    prepared = {}
    snapshot = None
    for f in files:
        p = load_prepared(f)
        prepared[p.attack] = p
        snapshot = p.metadata.get("config_snapshot", snapshot)
    if snapshot is None:
        raise ConfigError(
            "prepared file carries no config snapshot; cannot rebuild the experiment"
        )
    cfg = config_from_dict(snapshot)
    cfg = replace(cfg, attacks=tuple(sorted(prepared)))
    cfg.validate()
    return prepared, cfg


def _finish(record) -> int:
    if record.failure is not None:
        print(f"FAILED: {record.failure}", file=sys.stderr)
        return 1
    for name, path in sorted(record.artifacts.items()):
        print(f"wrote {name}: {path}")
    return 0


def _cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    record = run_attack_experiment(cfg)
    if record.failure is None:
        print(
            f"target accuracy: train={record.target_train_accuracy:.3f} "
            f"test={record.target_test_accuracy:.3f}"
        )
        for (attack, indicator), summary in record.summaries.items():
            print(
                f"{attack},{indicator}: tpr@0.01={summary['tpr@0.01']:.3f} "
                f"rta@1={summary['rta@1']:.4f}"
            )
    return _finish(record)


def _cmd_sweep(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    record = run_sweep(cfg, args.param, values)
    return _finish(record)


def _cmd_transfer(args) -> int:
    prepared, cfg = _load_prepared_arg(args.prepared)
    cfg = _apply_overrides(cfg, args)
    record = run_transferability(cfg, n_unknown=args.n_unknown, prepared=prepared)
    return _finish(record)


def _cmd_dp_eval(args) -> int:
    prepared, cfg = _load_prepared_arg(args.prepared)
    cfg = _apply_overrides(cfg, args)
    budget = None
    if args.budget_epsilon is not None or args.budget_delta is not None:
        budget = {"epsilon": args.budget_epsilon, "delta": args.budget_delta}
    record = run_dpsgd_eval(
        cfg,
        clip_norm=args.clip,
        noise_multiplier=args.noise,
        n_unknown=args.n_unknown,
        prepared=prepared,
        declared_budget=budget,
    )
    return _finish(record)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mi-audit", description="Membership-inference auditing harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="end-to-end attack experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.set_defaults(fn=_cmd_run)

    sweep = sub.add_parser("sweep", help="hyperparameter sweep")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", required=True, help="epsilon | sigma_noise | N")
    sweep.add_argument("--values", required=True, help="comma-separated values")
    sweep.add_argument("--out", default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.set_defaults(fn=_cmd_sweep)

    transfer = sub.add_parser("transfer", help="re-score reused variables on unknown models")
    transfer.add_argument("--prepared", required=True)
    transfer.add_argument("--n-unknown", type=int, default=10)
    transfer.add_argument("--out", default=None)
    transfer.set_defaults(fn=_cmd_transfer)

    dp = sub.add_parser("dp-eval", help="transferability against DP-SGD training")
    dp.add_argument("--prepared", required=True)
    dp.add_argument("--clip", type=float, required=True, help="per-sample clip norm C")
    dp.add_argument("--noise", type=float, required=True, help="noise multiplier")
    dp.add_argument("--n-unknown", type=int, default=10)
    dp.add_argument("--out", default=None)
    dp.add_argument("--budget-epsilon", type=float, default=None)
    dp.add_argument("--budget-delta", type=float, default=None)
    dp.set_defaults(fn=_cmd_dp_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
