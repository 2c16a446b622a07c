"""Decision-stage evaluation: TPR/FPR sweeps and the running TPR average.

Thresholds sweep the observed score values (plus a +inf sentinel) under the
"score >= tau means member" convention, so the curve starts at (0, 0) and
ends at (1, 1) with both rates non-decreasing.

RTA(t) summarizes high-confidence detection: for every distinct achievable
FPR level <= t take the best TPR at that level, then average the levels.
Perfect separation scores 1 at every t; an uninformative (all-equal-score)
indicator scores 0.5 at t = 1. Only score ORDER matters: any strictly
increasing rescaling leaves every metric unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RocCurve:
    """Threshold sweep sorted by descending tau; taus[0] is +inf."""

    taus: np.ndarray
    fprs: np.ndarray
    tprs: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.fprs) < 0) or np.any(np.diff(self.tprs) < 0):
            raise ValueError("fpr/tpr must be non-decreasing along descending tau")

    def __len__(self) -> int:
        return len(self.taus)


@dataclass
class RtaCurve:
    thresholds: np.ndarray
    values: np.ndarray


def _check_scores_truth(scores, truth):
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth).astype(np.int64)
    if scores.shape != truth.shape or scores.ndim != 1:
        raise ValueError("scores and truth must be equal-length vectors")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if truth.min() == truth.max():
        raise ValueError("need at least one member and one non-member")
    return scores, truth


def roc(scores, truth_bits) -> RocCurve:
    """TPR/FPR at every distinct score value plus a +inf sentinel."""
    scores, truth = _check_scores_truth(scores, truth_bits)
    member = truth == 1
    n_member = int(member.sum())
    n_nonmember = len(truth) - n_member
    taus = np.concatenate([[np.inf], np.unique(scores)[::-1]])
    tprs = np.empty(len(taus))
    fprs = np.empty(len(taus))
    for i, tau in enumerate(taus):
        flagged = scores >= tau
        tprs[i] = float((flagged & member).sum()) / n_member
        fprs[i] = float((flagged & ~member).sum()) / n_nonmember
    return RocCurve(taus=taus, fprs=fprs, tprs=tprs)


def tpr_at_fpr(curve: RocCurve, t: float) -> float:
    """Best TPR among operating points whose FPR does not exceed t."""
    mask = curve.fprs <= t
    return float(curve.tprs[mask].max()) if mask.any() else 0.0


def rta(curve: RocCurve, t: float) -> float:
    """Mean over achievable FPR levels <= t of the best TPR per level."""
    mask = curve.fprs <= t
    if not mask.any():
        return 0.0
    levels = np.unique(curve.fprs[mask])  # ascending
    best = [float(curve.tprs[curve.fprs == level].max()) for level in levels]
    return float(np.mean(best))


def default_t_grid(points: int = 30) -> np.ndarray:
    return np.logspace(-3.0, 0.0, points)


def rta_curve(scores, truth_bits, t_grid=None) -> RtaCurve:
    grid = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    if len(grid) and np.any(np.diff(grid) < 0):
        raise ValueError("t_grid must be sorted ascending")
    curve = roc(scores, truth_bits)
    return RtaCurve(
        thresholds=grid,
        values=np.array([rta(curve, t) for t in grid]),
    )


TPR_REPORT_LEVELS = (0.001, 0.01, 0.03, 0.05)
RTA_REPORT_LEVELS = (0.0, 0.01, 0.03, 0.05, 1.0)


def summary_metrics(scores, truth_bits) -> dict[str, float]:
    """The headline numbers: TPR and RTA at the standard low-FPR levels."""
    curve = roc(scores, truth_bits)
    out: dict[str, float] = {}
    for t in TPR_REPORT_LEVELS:
        out[f"tpr@{t:g}"] = tpr_at_fpr(curve, t)
    for t in RTA_REPORT_LEVELS:
        out[f"rta@{t:g}"] = rta(curve, t)
    return out
