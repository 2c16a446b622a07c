"""Adversarial subject perturbation via iterative FGSM.

The objective is the mean over shadow pairs of
phi(x + dx | non-member) - phi(x + dx | member): driving it down makes the
member shadows confident on the perturbed subject while the non-member
shadows lose confidence, which is exactly the separation the online
likelihood ratio keys on. Signed-gradient steps of size eps/steps are
projected after every step onto the eps-infinity-ball intersected with the
unit box, and the best iterate (including the zero start) is returned, so
the final objective can never exceed the unperturbed one.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, NumericalError
from ..nn.model import phi_objective


def _objective_terms(member_models, nonmember_models):
    """Signed phi terms; pairs are interleaved when the ensembles match in
    length so identical member/non-member lists cancel exactly."""
    n_non, n_mem = len(nonmember_models), len(member_models)
    if n_non == n_mem:
        terms = []
        w = 1.0 / n_non
        for f_n, f_m in zip(nonmember_models, member_models):
            terms.append((w, f_n))
            terms.append((-w, f_m))
        return terms
    return [(1.0 / n_non, m) for m in nonmember_models] + [
        (-1.0 / n_mem, m) for m in member_models
    ]


def perturbation_objective(x, y, delta_x, member_models, nonmember_models) -> float:
    """Mean phi gap at x + delta_x (the quantity optimize_perturbation minimizes)."""
    terms = _objective_terms(member_models, nonmember_models)
    value, _ = phi_objective(terms, np.asarray(x, dtype=np.float64) + delta_x, y)
    return value


def optimize_perturbation(
    x: np.ndarray,
    y: int,
    member_models,
    nonmember_models,
    eps: float,
    steps: int = 10,
) -> np.ndarray:
    """i-FGSM perturbation bounded by ||dx||_inf <= eps with x + dx in [0,1].

    Guarantees: the returned objective value is <= the value at dx = 0,
    and every constraint holds exactly (projection after each step).
    """
    if eps < 0:
        raise ConfigError(f"eps must be >= 0, got {eps}")
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")
    if not member_models or not nonmember_models:
        raise ValueError("need at least one member and one non-member model")
    x = np.asarray(x, dtype=np.float64)
    if eps == 0.0:
        return np.zeros_like(x)

    terms = _objective_terms(member_models, nonmember_models)
    lo = np.maximum(-eps, -x)        # keeps x + dx >= 0
    hi = np.minimum(eps, 1.0 - x)    # keeps x + dx <= 1
    alpha = eps / steps

    delta = np.zeros_like(x)
    best_value, best_delta = np.inf, delta
    for _ in range(steps):
        value, grad = phi_objective(terms, x + delta, y)
        if not np.isfinite(value):
            raise NumericalError("non-finite perturbation objective")
        if value < best_value:
            best_value, best_delta = value, delta
        delta = np.clip(delta - alpha * np.sign(grad), lo, hi)
    value, _ = phi_objective(terms, x + delta, y)
    if np.isfinite(value) and value < best_value:
        best_delta = delta
    return best_delta.copy()
