"""Training loop for the refinement head.

The co-occurrence prior (counts, conditional probabilities, reweighting
vector) is computed from the training labels only. The head is then fit
to minimize the summed reweighted asymmetric loss of the refined logits
with plain SGD (optional classic momentum) under a per-epoch cosine
learning-rate schedule. The batch objective is the sum, not the mean, of
per-element losses, so the configured learning rate is interpreted
against sum reduction. Class weights are rescaled to unit mean before
use (see ``_unit_mean``); the returned ReweightVector is the rescaled
one actually trained with.

Everything is deterministic given the config: batch order is keyed by
(seed, epoch), initialization by the same seed, and gradient
accumulation uses fixed-order reductions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabelMatrix, LogitMatrix, batches
from .errors import NumericError, ValidationError
from .gcn import GcnModel, gcn_backward, gcn_forward, init_model, with_weights
from .loss import RaslParams, rasl_grad, rasl_loss
from .metrics import per_class_average_precision
from .prior import (
    CondProbMatrix,
    ReweightVector,
    conditional_prob,
    cooccurrence,
    reweighting,
)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    epochs: int = 50
    batch_size: int = 32
    lr0: float = 0.002
    momentum: float = 0.0
    seed: int = 0
    gamma_pos: float = 1.0
    gamma_neg: float = 3.0
    delta: float = 0.05
    eps: float = 1e-8
    gcn_dims: tuple[int, ...] = (1, 64, 64, 1)
    leaky_slope: float = 0.01
    final_nonlinearity: bool = False
    reweight_mode: str = "frequency"

    def __post_init__(self):
        object.__setattr__(self, "gcn_dims", tuple(int(d) for d in self.gcn_dims))
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if not self.lr0 > 0:
            raise ValidationError("lr0 must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValidationError("momentum must be in [0, 1)")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    mean_loss: float                # summed loss over the epoch / n_samples
    lr: float
    val_map: float | None


@dataclass(frozen=True)
class TrainHistory:
    records: tuple[EpochRecord, ...]


def cosine_lr(lr0: float, step: int, total_steps: int) -> float:
    """Cosine-annealed learning rate: lr0 at step 0, 0 at step total_steps.

    No warmup, no restarts; the training loop steps this once per epoch.
    """
    if total_steps < 1:
        raise ValidationError("total_steps must be >= 1")
    if not 0 <= step <= total_steps:
        raise ValidationError(f"step {step} outside [0, {total_steps}]")
    return lr0 * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def sgd_step(
    model: GcnModel,
    grads,
    lr: float,
    momentum: float = 0.0,
    velocity=None,
):
    """Classic-momentum SGD update: v <- momentum*v + g; W <- W - lr*v.

    Returns (updated model, updated velocity). With momentum=0 this is
    plain SGD.
    """
    if velocity is None:
        velocity = tuple(np.zeros_like(w) for w in model.weights)
    if len(grads.d_weights) != model.n_layers or len(velocity) != model.n_layers:
        raise ValidationError("gradient/velocity layer count does not match the model")
    new_velocity = []
    new_weights = []
    for w, g, v in zip(model.weights, grads.d_weights, velocity):
        if g.shape != w.shape or v.shape != w.shape:
            raise ValidationError("gradient/velocity shape does not match the model")
        v_next = momentum * v + g
        updated = w - lr * v_next
        if not np.isfinite(updated).all():
            raise NumericError("training diverged: non-finite weights after update")
        new_velocity.append(v_next)
        new_weights.append(updated)
    return with_weights(model, new_weights), tuple(new_velocity)


def _unit_mean(weights: ReweightVector) -> ReweightVector:
    """Rescale class weights to mean 1 for training.

    The batch objective is a sum, so a uniform factor in the weights is
    indistinguishable from rescaling the learning rate; normalizing keeps
    lr0 calibrated independently of the dataset's class-count mass and
    makes a reweighted run comparable to a uniform-weight run. Only the
    relative per-class weighting survives; uniform modes come out as
    exactly 1.
    """
    return ReweightVector(weights.alphas / weights.alphas.mean(), weights.mode)


def _validation_map(model, cond, val_labels, val_logits) -> float:
    refined, _ = gcn_forward(model, cond, val_logits.values)
    ap, excluded = per_class_average_precision(refined, val_labels.values)
    included = np.setdiff1d(np.arange(val_labels.n_classes), excluded)
    return float(ap[included].mean()) if included.size else 0.0


def train(
    train_labels: LabelMatrix,
    train_logits: LogitMatrix,
    config: TrainConfig,
    validation: tuple[LabelMatrix, LogitMatrix] | None = None,
) -> tuple[GcnModel, ReweightVector, CondProbMatrix, TrainHistory]:
    """Fit the refinement head; returns (model, reweighting, cond-prob, history).

    The prior is estimated from the training split only. Aborts with a
    diagnostic if the mean epoch loss goes non-finite.
    """
    if train_labels.values.shape != train_logits.values.shape:
        raise ValidationError("training labels and logits shapes differ")
    if validation is not None:
        val_labels, val_logits = validation
        if val_labels.values.shape != val_logits.values.shape:
            raise ValidationError("validation labels and logits shapes differ")
        if val_labels.n_classes != train_labels.n_classes:
            raise ValidationError("validation class count differs from training")

    cooc = cooccurrence(train_labels)
    cond = conditional_prob(cooc)
    weights = _unit_mean(reweighting(cooc, config.reweight_mode))
    params = RaslParams(
        alphas=weights,
        gamma_pos=config.gamma_pos,
        gamma_neg=config.gamma_neg,
        delta=config.delta,
        eps=config.eps,
    )
    model = init_model(
        config.gcn_dims, config.leaky_slope, config.seed, config.final_nonlinearity
    )
    velocity = tuple(np.zeros_like(w) for w in model.weights)

    x = train_logits.values
    y = train_labels.values
    n = train_labels.n_samples
    records = []
    for epoch in range(config.epochs):
        lr = cosine_lr(config.lr0, epoch, config.epochs)
        epoch_loss = 0.0
        for idx in batches(n, config.batch_size, config.seed, epoch):
            refined, cache = gcn_forward(model, cond, x[idx])
            batch_loss, _ = rasl_loss(refined, y[idx], params)
            grad_logits = rasl_grad(refined, y[idx], params)
            grads = gcn_backward(model, cond, cache, grad_logits)
            model, velocity = sgd_step(model, grads, lr, config.momentum, velocity)
            epoch_loss += batch_loss
        mean_loss = epoch_loss / n
        if not math.isfinite(mean_loss):
            raise NumericError(
                f"training diverged: mean loss {mean_loss} at epoch {epoch} "
                f"(lr={lr:.6g})"
            )
        val_map = None
        if validation is not None:
            val_map = _validation_map(model, cond, val_labels, val_logits)
        records.append(EpochRecord(epoch, mean_loss, lr, val_map))
    return model, weights, cond, TrainHistory(tuple(records))
