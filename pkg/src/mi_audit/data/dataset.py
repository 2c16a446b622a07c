"""Datasets, the experiment split protocol, and subject sampling.

The audit protocol partitions a pool d_r into a training half d_t (by
index), keeps a held-out test set d_s, and draws k subjects whose
membership in d_t is the ground truth being inferred. Membership bits are
stored on the SubjectSet but deliberately kept out of everything the
attack-preparation code consumes -- only the metrics/reporting layer may
read ``ground_truth``.

All sampling here is a pure function of its integer seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError
from ..indicators import as_predict_fn
from ..seeding import derive_seed
from ..validation import (
    as_float_array,
    as_label_array,
    check_labels_in_range,
    check_probability_rows,
    check_unit_interval,
)


@dataclass
class Dataset:
    """Inputs in the unit hypercube with integer labels.

    ``soft_labels``, when present, are full probability rows and take
    precedence over ``labels`` as training targets.
    """

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int
    soft_labels: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = as_float_array(self.inputs, "inputs")
        self.labels = as_label_array(self.labels, "labels")
        if len(self.inputs) != len(self.labels):
            raise ValueError(
                f"inputs count {len(self.inputs)} != labels count {len(self.labels)}"
            )
        check_unit_interval(self.inputs, "inputs")
        check_labels_in_range(self.labels, self.num_classes)
        if self.soft_labels is not None:
            self.soft_labels = as_float_array(self.soft_labels, "soft_labels")
            if self.soft_labels.shape != (len(self.labels), self.num_classes):
                raise ValueError(
                    f"soft_labels shape {self.soft_labels.shape} != "
                    f"({len(self.labels)}, {self.num_classes})"
                )
            check_probability_rows(self.soft_labels, "soft_labels")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            inputs=self.inputs[idx],
            labels=self.labels[idx],
            num_classes=self.num_classes,
            soft_labels=None if self.soft_labels is None else self.soft_labels[idx],
        )


def concat_datasets(a: Dataset, b: Dataset) -> Dataset:
    """Union of two datasets; hard labels are one-hot expanded if either
    side carries soft rows (cross-entropy against a one-hot row equals the
    hard-label loss, so mixing is exact)."""
    if a.num_classes != b.num_classes:
        raise ValueError(f"class counts differ: {a.num_classes} vs {b.num_classes}")
    m = a.num_classes
    soft = None
    if a.soft_labels is not None or b.soft_labels is not None:
        rows_a = a.soft_labels if a.soft_labels is not None else np.eye(m)[a.labels]
        rows_b = b.soft_labels if b.soft_labels is not None else np.eye(m)[b.labels]
        soft = np.concatenate([rows_a, rows_b])
    return Dataset(
        inputs=np.concatenate([a.inputs, b.inputs]),
        labels=np.concatenate([a.labels, b.labels]),
        num_classes=m,
        soft_labels=soft,
    )


@dataclass
class ExperimentSplit:
    """d_r with the index set defining the target's training half d_t, plus
    the held-out test set d_s."""

    d_r: Dataset
    d_t_indices: np.ndarray
    d_s: Dataset

    def __post_init__(self):
        self.d_t_indices = np.asarray(self.d_t_indices, dtype=np.int64)
        if len(np.unique(self.d_t_indices)) != len(self.d_t_indices):
            raise ValueError("d_t_indices must be unique")
        if len(self.d_t_indices) != len(self.d_r) // 2:
            raise ValueError(
                f"|d_t| must be floor(|d_r|/2) = {len(self.d_r) // 2}, "
                f"got {len(self.d_t_indices)}"
            )

    @property
    def d_t(self) -> Dataset:
        return self.d_r.subset(self.d_t_indices)

    @property
    def attacker_pool_size(self) -> int:
        return len(self.d_t_indices) // 2


@dataclass
class SubjectSet:
    """The k subjects under audit.

    ``ground_truth`` exists for the metrics/decision stage only; attack
    preparation and indicators must never read it (tests enforce that
    prepared variables are invariant to these bits).
    """

    inputs: np.ndarray
    labels: np.ndarray
    source_indices: np.ndarray
    ground_truth: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.source_indices = np.asarray(self.source_indices, dtype=np.int64)
        self.ground_truth = np.asarray(self.ground_truth, dtype=np.int64)

    @property
    def k(self) -> int:
        return len(self.labels)


def make_split(d_r: Dataset, d_s: Dataset, seed: int) -> ExperimentSplit:
    """Sample the training half uniformly without replacement."""
    if len(d_r) < 2:
        raise ConfigError(f"need |d_r| >= 2, got {len(d_r)}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(d_r), size=len(d_r) // 2, replace=False)
    return ExperimentSplit(d_r=d_r, d_t_indices=np.sort(idx), d_s=d_s)


def sample_subjects(split: ExperimentSplit, k: int, seed: int) -> SubjectSet:
    """Draw k distinct subjects, each from d_t with probability 1/2, else
    from d_r \\ d_t; membership bits are recorded as ground truth."""
    n = len(split.d_r)
    if k > n:
        raise ConfigError(f"k={k} exceeds |d_r|={n}")
    rng = np.random.default_rng(seed)
    member_pool = list(map(int, rng.permutation(split.d_t_indices)))
    nonmember_pool = list(
        map(int, rng.permutation(np.setdiff1d(np.arange(n), split.d_t_indices)))
    )
    chosen, bits = [], []
    for _ in range(k):
        want_member = bool(rng.integers(0, 2))
        pool = member_pool if want_member else nonmember_pool
        if not pool:  # requested pool exhausted; only possible for large k
            pool = nonmember_pool if want_member else member_pool
            want_member = not want_member
        chosen.append(pool.pop())
        bits.append(int(want_member))
    idx = np.asarray(chosen, dtype=np.int64)
    return SubjectSet(
        inputs=split.d_r.inputs[idx],
        labels=split.d_r.labels[idx],
        source_indices=idx,
        ground_truth=np.asarray(bits, dtype=np.int64),
    )


def sample_attacker_set(
    split: ExperimentSplit, subject_indices: np.ndarray, seed: int, j: int
) -> Dataset:
    """Fresh attacker draw D_a^j from d_r, excluding every subject.

    Size is floor(|d_t|/2). Only the subject indices and the public pool
    are consulted -- never the d_t membership of anything.
    """
    size = split.attacker_pool_size
    pool = np.setdiff1d(np.arange(len(split.d_r)), np.asarray(subject_indices, dtype=np.int64))
    if len(pool) < size:
        raise ConfigError(
            f"attacker pool has {len(pool)} points after excluding subjects, "
            f"need {size}"
        )
    rng = np.random.default_rng(derive_seed(seed, "attacker-set", j))
    idx = np.sort(rng.choice(pool, size=size, replace=False))
    return split.d_r.subset(idx)


def soft_relabel(d_a: Dataset, target) -> Dataset:
    """Replace targets with the model's probability rows (hard labels
    become the argmax for bookkeeping)."""
    rows = as_predict_fn(target)(d_a.inputs)
    check_probability_rows(rows, "soft labels")
    return Dataset(
        inputs=d_a.inputs,
        labels=rows.argmax(axis=1).astype(np.int64),
        num_classes=d_a.num_classes,
        soft_labels=rows,
    )


def random_bisect(k: int, seed: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint halves of range(k), sizes ceil(k/2) / floor(k/2), fresh per j."""
    if k < 2:
        raise ConfigError(f"need k >= 2 to bisect, got {k}")
    rng = np.random.default_rng(derive_seed(seed, "bisect", j))
    perm = rng.permutation(k)
    half = (k + 1) // 2
    return np.sort(perm[:half]), np.sort(perm[half:])
