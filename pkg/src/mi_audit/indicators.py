"""Membership indicators: logit-scaled confidence and likelihood ratios.

The test statistic is the logit of the true-class probability,
``phi(q) = log(q / (1 - q))``, clamped away from {0, 1} so memorized
subjects stay finite. Indicators turn an observed statistic into a
membership-likelihood score using Gaussian fits estimated from shadow
models:

- ``lr_offline``: one-sided test against the non-member fit only
  (a normal CDF, so scores lie in [0, 1]).
- ``lr_online``: ratio of member to non-member normal densities.
- ``lr_perturbed``: mean per-noise likelihood ratio over a Gaussian
  noise bank around the (possibly perturbed) subject.
- ``lr_optimal``: same, restricted to the z noise indices whose
  member/non-member statistic gap is largest.

All functions are pure; scoring a batch of subjects is safe to run
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.stats import norm

from .errors import ConfigError

if TYPE_CHECKING:  # pragma: no cover - type-only import, avoids a cycle
    from .attacks.prepare import PreparedVariables
    from .data.dataset import SubjectSet

# Probability clamp before the log-ratio; keeps phi finite at the boundaries.
PHI_CLAMP = 1e-7

# Density ratios are evaluated in log space and saturated here before exp().
LOG_RATIO_SATURATION = 700.0

INDICATOR_KINDS = ("lr_f", "lr_n", "lr_p", "lr_o")

# lr_n and lr_o need member-side Gaussian fits; lr_f and lr_p work from
# non-member fits alone (lr_p falls back to the offline per-noise ratio).
MEMBER_STATS_REQUIRED = frozenset({"lr_n", "lr_o"})


@dataclass(frozen=True)
class IndicatorScore:
    subject_index: int
    score: float
    indicator_kind: str


def phi(prob) -> np.ndarray | float:
    """Logit-scale a probability: log(q / (1 - q)) with q clamped.

    Strictly increasing on the clamped domain and antisymmetric around
    q = 0.5 (phi(0.5) == 0.0 exactly).
    """
    q = np.clip(np.asarray(prob, dtype=np.float64), PHI_CLAMP, 1.0 - PHI_CLAMP)
    out = np.log(q) - np.log1p(-q)
    return float(out) if np.isscalar(prob) or out.ndim == 0 else out


def phi_derivative(prob) -> np.ndarray | float:
    """d phi / d prob, zero where the clamp saturates."""
    p = np.asarray(prob, dtype=np.float64)
    inside = (p >= PHI_CLAMP) & (p <= 1.0 - PHI_CLAMP)
    q = np.clip(p, PHI_CLAMP, 1.0 - PHI_CLAMP)
    out = np.where(inside, 1.0 / (q * (1.0 - q)), 0.0)
    return float(out) if np.isscalar(prob) or out.ndim == 0 else out


def lr_offline(phi_obs, mu_n: float, sigma_n: float):
    """Offline likelihood ratio: P[statistic <= phi_obs] under the
    non-member fit, i.e. the normal CDF of the standardized statistic."""
    return norm.cdf((np.asarray(phi_obs, dtype=np.float64) - mu_n) / sigma_n)


def lr_online(phi_obs, mu_m: float, sigma_m: float, mu_n: float, sigma_n: float):
    """Online likelihood ratio: member density over non-member density.

    Evaluated in log space and saturated at exp(+-700) so degenerate
    (sigma near the floor) fits cannot overflow.
    """
    obs = np.asarray(phi_obs, dtype=np.float64)
    log_ratio = norm.logpdf(obs, mu_m, sigma_m) - norm.logpdf(obs, mu_n, sigma_n)
    return np.exp(np.clip(log_ratio, -LOG_RATIO_SATURATION, LOG_RATIO_SATURATION))


def select_noise_indices(gaps: np.ndarray, z: int) -> np.ndarray:
    """Indices of the z largest member/non-member gaps.

    Greedy argmax without replacement; ties resolve to the lower index.
    Returned sorted ascending so downstream averages are order-stable.
    """
    gaps = np.asarray(gaps, dtype=np.float64)
    if not 1 <= z <= len(gaps):
        raise ConfigError(f"z must be in [1, {len(gaps)}], got {z}")
    chosen = np.argsort(-gaps, kind="stable")[:z]
    return np.sort(chosen)


def decide(scores, tau: float) -> np.ndarray:
    """Threshold scores into membership bits; score >= tau means member."""
    return (np.asarray(scores, dtype=np.float64) >= tau).astype(np.int64)


def _per_noise_ratios(
    phi_obs_per_l: np.ndarray,
    noise_nonmember: np.ndarray,
    noise_member: np.ndarray | None,
) -> np.ndarray:
    """Per-noise-level likelihood ratios from raw phi banks.

    Each noise level l gets its own Gaussian fit of the shadow statistics;
    the ratio at level l is online when member banks exist, offline
    otherwise. Returns an array of length p in noise-bank order.
    """
    from .attacks.stats import fit_gaussian  # local import breaks the cycle

    p = len(phi_obs_per_l)
    out = np.empty(p, dtype=np.float64)
    for level in range(p):
        n_fit = fit_gaussian(noise_nonmember[level])
        if noise_member is None:
            out[level] = lr_offline(phi_obs_per_l[level], n_fit.mu, n_fit.sigma)
        else:
            m_fit = fit_gaussian(noise_member[level])
            out[level] = lr_online(
                phi_obs_per_l[level], m_fit.mu, m_fit.sigma, n_fit.mu, n_fit.sigma
            )
    return out


def lr_perturbed(
    phi_obs_per_l: np.ndarray,
    noise_nonmember: np.ndarray,
    noise_member: np.ndarray | None,
) -> float:
    """Mean per-noise likelihood ratio over the whole noise bank."""
    return float(np.mean(_per_noise_ratios(phi_obs_per_l, noise_nonmember, noise_member)))


def lr_optimal(
    phi_obs_per_l: np.ndarray,
    noise_nonmember: np.ndarray,
    noise_member: np.ndarray,
    z: int,
) -> float:
    """Mean per-noise online ratio over the z best noise indices.

    With z == p this equals ``lr_perturbed`` bit-exactly (same per-level
    ratios, averaged in the same index order).
    """
    if noise_member is None:
        raise ConfigError("lr_o requires member-side noise statistics")
    gaps = np.mean(noise_member, axis=1) - np.mean(noise_nonmember, axis=1)
    chosen = select_noise_indices(gaps, z)
    ratios = _per_noise_ratios(phi_obs_per_l, noise_nonmember, noise_member)
    return float(np.mean(ratios[chosen]))


def as_predict_fn(target) -> Callable[[np.ndarray], np.ndarray]:
    """Adapt a model-like object to a batch probability function.

    Accepts a callable mapping (n, ...) inputs to (n, m) probability rows,
    or anything exposing ``predict_proba`` (NeuralNetClassifier,
    ModelParams).
    """
    if callable(target) and not hasattr(target, "predict_proba"):
        return target
    if hasattr(target, "predict_proba"):
        return target.predict_proba
    raise TypeError(
        f"target of type {type(target).__name__} is neither callable nor has predict_proba"
    )


def indicator_compatible(attack: str, indicator: str) -> bool:
    """Whether the indicator can be evaluated from the attack's prepared stats."""
    offline_only = attack in ("flira", "emia")
    return not (offline_only and indicator in MEMBER_STATS_REQUIRED)


def score_subjects(
    target,
    subjects: "SubjectSet",
    prepared: "PreparedVariables",
    indicator: str,
    z: int | None = None,
) -> np.ndarray:
    """Indication stage: one membership-likelihood score per subject.

    The target model is queried black-box at x + delta_x (plus the stored
    noise bank for the augmented indicators) -- exactly the points the
    prepared statistics were computed at.
    """
    if indicator not in INDICATOR_KINDS:
        raise ConfigError(f"unknown indicator {indicator!r}")
    if indicator in MEMBER_STATS_REQUIRED and not prepared.has_member_stats:
        raise ConfigError(
            f"indicator {indicator!r} needs member statistics, which "
            f"{prepared.attack!r} preparation does not produce"
        )
    predict = as_predict_fn(target)
    k = len(prepared.records)
    if subjects.k != k:
        raise ValueError(f"subject count {subjects.k} != prepared record count {k}")

    noises = prepared.noise_bank.noises  # (p, *input_shape)
    scores = np.empty(k, dtype=np.float64)
    for i, record in enumerate(prepared.records):
        base = subjects.inputs[i] + record.delta_x
        y = int(subjects.labels[i])
        if indicator in ("lr_f", "lr_n"):
            prob = predict(base[None, ...])[0, y]
            obs = phi(prob)
            s = record.nonmember_stats
            if indicator == "lr_f":
                scores[i] = lr_offline(obs, s.mu, s.sigma)
            else:
                m = record.member_stats
                scores[i] = lr_online(obs, m.mu, m.sigma, s.mu, s.sigma)
        else:
            queries = base[None, ...] + noises
            obs_per_l = phi(predict(queries)[:, y])
            if indicator == "lr_p":
                scores[i] = lr_perturbed(
                    obs_per_l, record.noise_nonmember, record.noise_member
                )
            else:
                z_eff = prepared.noise_bank.p if z is None else z
                scores[i] = lr_optimal(
                    obs_per_l, record.noise_nonmember, record.noise_member, z_eff
                )
    return scores


def score_table(scores: np.ndarray, indicator: str) -> list[IndicatorScore]:
    return [
        IndicatorScore(subject_index=i, score=float(s), indicator_kind=indicator)
        for i, s in enumerate(scores)
    ]
