"""Artifact emission: CSV tables and JSON summaries.

Everything written here is a pure function of the record (sorted JSON keys,
stringified floats, no timestamps), so re-emitting a record -- or re-running
the same config -- produces identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..attacks.io import save_prepared
from ..errors import ConfigError
from ..metrics import default_t_grid, roc, rta, rta_curve, summary_metrics


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", "utf-8")


def _pair_key(attack: str, indicator: str) -> str:
    return f"{attack}/{indicator}"


def emit_report(record, out_dir) -> dict[str, Path]:
    """Write the record's artifact set into out_dir; returns name -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if record.kind == "attack":
        return _emit_attack(record, out)
    if record.kind in ("transfer", "dp-eval"):
        return _emit_transfer(record, out)
    if record.kind == "sweep":
        return _emit_sweep(record, out)
    raise ConfigError(f"cannot emit a record of kind {record.kind!r}")


def _emit_attack(record, out: Path) -> dict[str, Path]:
    if not record.scores:
        raise ConfigError("nothing to report: no score tables on the record")
    artifacts: dict[str, Path] = {}

    artifacts["config"] = out / "config.json"
    _write_json(artifacts["config"], record.config.to_flat_dict())

    truth = record.ground_truth
    score_rows = []
    roc_rows = []
    rta_rows = []
    grid = default_t_grid()
    for (attack, indicator), scores in record.scores.items():
        for i, s in enumerate(scores):
            score_rows.append([attack, indicator, i, float(s), int(truth[i])])
        curve = roc(scores, truth)
        for tau, fpr, tpr in zip(curve.taus, curve.fprs, curve.tprs):
            roc_rows.append([attack, indicator, float(tau), float(fpr), float(tpr)])
        rc = rta_curve(scores, truth, grid)
        for t, value in zip(rc.thresholds, rc.values):
            rta_rows.append([attack, indicator, float(t), float(value)])

    artifacts["scores"] = out / "scores.csv"
    _write_csv(
        artifacts["scores"],
        ["attack", "indicator", "subject_index", "score", "ground_truth"],
        score_rows,
    )
    artifacts["roc"] = out / "roc.csv"
    _write_csv(artifacts["roc"], ["attack", "indicator", "tau", "fpr", "tpr"], roc_rows)
    artifacts["rta"] = out / "rta.csv"
    _write_csv(artifacts["rta"], ["attack", "indicator", "t", "rta"], rta_rows)

    summary = {
        "target": {
            "train_accuracy": record.target_train_accuracy,
            "test_accuracy": record.target_test_accuracy,
        },
        "attacks": {
            _pair_key(a, i): metrics for (a, i), metrics in record.summaries.items()
        },
    }
    artifacts["summary"] = out / "summary.json"
    _write_json(artifacts["summary"], summary)

    for attack, prepared in record.prepared.items():
        name = f"prepared_{attack}"
        artifacts[name] = out / f"{name}.json"
        save_prepared(prepared, artifacts[name])
    return artifacts


def _emit_transfer(record, out: Path) -> dict[str, Path]:
    if not record.transfer_results:
        raise ConfigError("nothing to report: no transfer results on the record")
    prefix = "transfer" if record.kind == "transfer" else "dpeval"
    artifacts: dict[str, Path] = {}
    truth = record.ground_truth
    grid = default_t_grid()

    score_rows = []
    rta_rows = []
    # per (training, attack, indicator): list of per-model rta vectors for means
    mean_acc: dict[tuple[str, str, str], list[np.ndarray]] = {}
    summary_acc: dict[tuple[str, str, str], list[dict]] = {}
    for result in record.transfer_results:
        for (attack, indicator), scores in result.scores.items():
            for i, s in enumerate(scores):
                score_rows.append(
                    [result.training, result.model_index, attack, indicator, i, float(s)]
                )
            rc = rta_curve(scores, truth, grid)
            for t, value in zip(rc.thresholds, rc.values):
                rta_rows.append(
                    [result.training, result.model_index, attack, indicator, float(t), float(value)]
                )
            key = (result.training, attack, indicator)
            mean_acc.setdefault(key, []).append(rc.values)
            summary_acc.setdefault(key, []).append(summary_metrics(scores, truth))
    for (training, attack, indicator), curves in mean_acc.items():
        mean_values = np.mean(np.stack(curves), axis=0)
        for t, value in zip(grid, mean_values):
            rta_rows.append([training, "mean", attack, indicator, float(t), float(value)])

    artifacts["scores"] = out / f"{prefix}_scores.csv"
    _write_csv(
        artifacts["scores"],
        ["training", "model_index", "attack", "indicator", "subject_index", "score"],
        score_rows,
    )
    artifacts["rta"] = out / f"{prefix}_rta.csv"
    _write_csv(
        artifacts["rta"],
        ["training", "model_index", "attack", "indicator", "t", "rta"],
        rta_rows,
    )

    summary: dict = {"n_models": len(record.transfer_results)}
    if record.mechanism is not None:
        summary["mechanism"] = record.mechanism
    mean_summaries: dict = {}
    for (training, attack, indicator), metrics_list in summary_acc.items():
        keys = metrics_list[0].keys()
        mean_summaries.setdefault(training, {})[_pair_key(attack, indicator)] = {
            key: float(np.mean([m[key] for m in metrics_list])) for key in keys
        }
    summary["mean"] = mean_summaries
    artifacts["summary"] = out / f"{prefix}_summary.json"
    _write_json(artifacts["summary"], summary)
    return artifacts


def _emit_sweep(record, out: Path) -> dict[str, Path]:
    if not record.sweep_rows:
        raise ConfigError("nothing to report: no sweep rows on the record")
    artifacts: dict[str, Path] = {}
    columns = ["param", "value", "attack", "indicator"]
    metric_keys = sorted(
        {key for row in record.sweep_rows for key in row if key not in columns + ["failure"]}
    )
    header = columns + metric_keys + ["failure"]
    rows = [
        [row.get(col, "") for col in columns]
        + [row.get(key, "") for key in metric_keys]
        + [row.get("failure", "")]
        for row in record.sweep_rows
    ]
    artifacts["sweep"] = out / "sweep.csv"
    _write_csv(artifacts["sweep"], header, rows)
    artifacts["config"] = out / "config.json"
    _write_json(artifacts["config"], record.config.to_flat_dict())
    return artifacts
