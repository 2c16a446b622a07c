"""Versioned JSON container for prepared variables.

A saved container is self-sufficient for transfer studies: the harness
stashes its config snapshot in the metadata, and scoring a new model needs
nothing beyond this file (no shadow retraining).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..encoding import array_to_b64, b64_to_array
from ..errors import PreparedIOError
from .noise import NoiseBank
from .prepare import PREPARED_ATTACKS, PreparedVariables, SubjectRecord
from .stats import GaussianStats

PREPARED_FORMAT = "mi-audit-prepared"
PREPARED_VERSION = 1


def _stats_to_dict(s: GaussianStats | None):
    if s is None:
        return None
    return {"mu": s.mu, "sigma": s.sigma, "n_samples": s.n_samples}


def _stats_from_dict(d) -> GaussianStats | None:
    if d is None:
        return None
    return GaussianStats(mu=d["mu"], sigma=d["sigma"], n_samples=d["n_samples"])


def prepared_to_dict(prepared: PreparedVariables) -> dict:
    bank = prepared.noise_bank
    records = []
    for r in prepared.records:
        records.append(
            {
                "delta_x": array_to_b64(r.delta_x),
                "delta_x_shape": list(r.delta_x.shape),
                "nonmember": _stats_to_dict(r.nonmember_stats),
                "member": _stats_to_dict(r.member_stats),
                "noise_nonmember": array_to_b64(r.noise_nonmember),
                "noise_member": None
                if r.noise_member is None
                else array_to_b64(r.noise_member),
                "bank_shape": list(r.noise_nonmember.shape),
                "bisection_signs": None
                if r.bisection_signs is None
                else [int(s) for s in r.bisection_signs],
            }
        )
    return {
        "format": PREPARED_FORMAT,
        "version": PREPARED_VERSION,
        "attack": prepared.attack,
        "epsilon": prepared.epsilon,
        "noise_bank": {
            "noises": array_to_b64(bank.noises),
            "shape": list(bank.noises.shape),
            "sigma_noise": bank.sigma_noise,
            "seed": bank.seed,
        },
        "metadata": prepared.metadata,
        "records": records,
    }


def prepared_from_dict(d: dict) -> PreparedVariables:
    if not isinstance(d, dict) or d.get("format") != PREPARED_FORMAT:
        raise PreparedIOError(f"not a {PREPARED_FORMAT} container")
    if d.get("version") != PREPARED_VERSION:
        raise PreparedIOError(f"unsupported container version {d.get('version')!r}")
    if d.get("attack") not in PREPARED_ATTACKS:
        raise PreparedIOError(f"unknown attack kind {d.get('attack')!r}")
    try:
        bank_d = d["noise_bank"]
        bank = NoiseBank(
            noises=b64_to_array(bank_d["noises"], bank_d["shape"]),
            sigma_noise=float(bank_d["sigma_noise"]),
            seed=int(bank_d["seed"]),
        )
        records = []
        for r in d["records"]:
            records.append(
                SubjectRecord(
                    delta_x=b64_to_array(r["delta_x"], r["delta_x_shape"]),
                    nonmember_stats=_stats_from_dict(r["nonmember"]),
                    member_stats=_stats_from_dict(r["member"]),
                    noise_nonmember=b64_to_array(r["noise_nonmember"], r["bank_shape"]),
                    noise_member=None
                    if r["noise_member"] is None
                    else b64_to_array(r["noise_member"], r["bank_shape"]),
                    bisection_signs=None
                    if r["bisection_signs"] is None
                    else np.asarray(r["bisection_signs"], dtype=np.int64),
                )
            )
    except (KeyError, TypeError, ValueError) as err:
        raise PreparedIOError(f"corrupt prepared container: {err}") from err
    return PreparedVariables(
        attack=d["attack"],
        epsilon=float(d["epsilon"]),
        noise_bank=bank,
        records=records,
        metadata=d.get("metadata", {}),
    )


def save_prepared(prepared: PreparedVariables, path) -> None:
    Path(path).write_text(
        json.dumps(prepared_to_dict(prepared), sort_keys=True), "utf-8"
    )


def load_prepared(path) -> PreparedVariables:
    try:
        d = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as err:
        raise PreparedIOError(f"corrupt prepared file {path}: {err}") from err
    return prepared_from_dict(d)
