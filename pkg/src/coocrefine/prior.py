"""Co-occurrence statistics over training labels.

Three artifacts are derived from a label matrix: the symmetric pairwise
co-occurrence count matrix, the row-conditional probability matrix used
as fixed propagation weights by the refinement network, and the
per-class loss reweighting vector that counteracts class imbalance.

All functions are pure; inputs and outputs are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._arrays import frozen_array
from .data import LabelMatrix
from .errors import ValidationError

REWEIGHT_MODES = ("frequency", "literal", "none")


@dataclass(frozen=True)
class CoocMatrix:
    """Pairwise label co-occurrence counts; diagonal holds class frequencies."""

    counts: np.ndarray              # (N, N) int64, symmetric

    def __post_init__(self):
        counts = frozen_array(self.counts, np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValidationError("co-occurrence counts must be square")
        if (counts < 0).any():
            raise ValidationError("co-occurrence counts must be non-negative")
        if (counts != counts.T).any():
            raise ValidationError("co-occurrence counts must be symmetric")
        diag = counts.diagonal()
        if (counts > np.minimum(diag[:, None], diag[None, :])).any():
            raise ValidationError("pair count exceeds a class frequency")
        object.__setattr__(self, "counts", counts)

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]


@dataclass(frozen=True)
class CondProbMatrix:
    """Estimated P(column class present | row class present).

    Rows of classes never seen in training cannot be normalized; they are
    set to the identity row (probability 1 on the class itself, 0
    elsewhere) and recorded in ``zero_count_classes``. Under identity
    rows, graph propagation degrades to self-propagation for such
    classes instead of producing NaNs.
    """

    probs: np.ndarray               # (N, N) float64 in [0, 1]
    zero_count_classes: frozenset[int]

    def __post_init__(self):
        probs = frozen_array(self.probs, np.float64)
        if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
            raise ValidationError("conditional probabilities must be square")
        if (probs < 0).any() or (probs > 1).any():
            raise ValidationError("conditional probabilities must lie in [0, 1]")
        if not np.allclose(probs.diagonal(), 1.0):
            raise ValidationError("diagonal conditional probabilities must be 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "zero_count_classes", frozenset(int(i) for i in self.zero_count_classes))

    @property
    def n_classes(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class ReweightVector:
    """Per-class multiplicative loss weights.

    ``frequency`` mode weights a class by the inverse of its share of the
    total class-frequency mass, ``literal`` assigns every class the class
    count N, and ``none`` assigns 1 everywhere.
    """

    alphas: np.ndarray              # (N,) positive finite float64
    mode: str

    def __post_init__(self):
        alphas = frozen_array(self.alphas, np.float64)
        if alphas.ndim != 1:
            raise ValidationError("alphas must be a vector")
        if not np.isfinite(alphas).all() or (alphas <= 0).any():
            raise ValidationError("alphas must be positive and finite")
        if self.mode not in REWEIGHT_MODES:
            raise ValidationError(f"unknown reweight mode '{self.mode}'")
        if self.mode in ("literal", "none") and not np.all(alphas == alphas[0]):
            raise ValidationError(f"{self.mode} mode requires equal alphas")
        object.__setattr__(self, "alphas", alphas)

    @property
    def n_classes(self) -> int:
        return self.alphas.shape[0]


def cooccurrence(labels: LabelMatrix) -> CoocMatrix:
    """Count, for every class pair, the samples where both are present.

    Equals Y^T Y for the binary label matrix Y; the diagonal counts each
    class's positive samples.
    """
    y = labels.values.astype(np.int64)
    return CoocMatrix(y.T @ y)


def conditional_prob(cooc: CoocMatrix) -> CondProbMatrix:
    """Normalize each co-occurrence row by its diagonal count.

    Entry (m, n) estimates the probability that class n is present given
    class m is. Zero-count rows become identity rows and are recorded.
    """
    counts = cooc.counts
    diag = counts.diagonal().astype(np.float64)
    zero = diag == 0
    safe = np.where(zero, 1.0, diag)
    probs = counts / safe[:, None]
    if zero.any():
        zero_idx = np.flatnonzero(zero)
        probs[zero_idx, :] = 0.0
        probs[zero_idx, zero_idx] = 1.0
    return CondProbMatrix(probs, frozenset(int(i) for i in np.flatnonzero(zero)))


def reweighting(cooc: CoocMatrix, mode: str = "frequency") -> ReweightVector:
    """Per-class loss weights from the co-occurrence diagonal.

    frequency: alpha_j = (sum_k c_kk) / max(c_jj, 1), i.e. the inverse of
    class j's relative frequency share; rarer classes get larger weights.
    Zero counts are clamped to 1, and an all-zero diagonal degrades to
    uniform weights of 1. literal: alpha_j = N for every class (the
    normalized-share reading with every self-probability equal to 1).
    none: alpha_j = 1.
    """
    n = cooc.n_classes
    if mode == "frequency":
        diag = cooc.counts.diagonal().astype(np.float64)
        total = max(float(diag.sum()), 1.0)
        alphas = total / np.maximum(diag, 1.0)
    elif mode == "literal":
        alphas = np.full(n, float(n))
    elif mode == "none":
        alphas = np.ones(n)
    else:
        raise ValidationError(f"unknown reweight mode '{mode}'")
    return ReweightVector(alphas, mode)


def top_k_mean_condprob(cond: CondProbMatrix, class_index: int, k: int) -> float:
    """Mean of the k largest off-diagonal conditional probabilities in a row."""
    n = cond.n_classes
    if not 0 <= class_index < n:
        raise ValidationError(f"class index {class_index} out of range")
    if not 1 <= k <= n - 1:
        raise ValidationError(f"k must be in [1, {n - 1}], got {k}")
    row = np.delete(cond.probs[class_index], class_index)
    top = np.sort(row)[-k:]
    return float(top.mean())
