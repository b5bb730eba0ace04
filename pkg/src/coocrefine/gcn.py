"""Graph-convolutional refinement head over class nodes.

Each sample's per-class logits form a one-feature-per-node graph signal.
A layer propagates features through the fixed conditional-probability
matrix and mixes them with a learned weight matrix:

    H_l = act(P @ H_{l-1} @ W_l)

where P is the row-normalized conditional-probability matrix (see
``propagation_matrix``), W_l the layer's learnable weights, and act a
LeakyReLU applied on hidden layers (and on the last layer only when
``final_nonlinearity`` is set). Layers carry no
bias, so zero input maps to zero output. The head's output is added back
onto the input logits: refined = h0 + head(h0).

Gradients are computed analytically in reverse mode; the LeakyReLU
subgradient at exactly 0 uses the positive-branch slope 1. Forward and
backward are pure functions of their inputs and bitwise deterministic.

Model file format (version ``coocrefine-gcn v1``), all tokens space
separated, floats written with shortest round-trip repr:

    coocrefine-gcn v1
    layer_dims 1 64 64 1
    leaky_slope 0.01
    final_nonlinearity 0
    weights 0 1 64
    <one line per weight-matrix row: d_out floats>
    weights 1 64 64
    ...
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ._arrays import frozen_array
from .errors import NumericError, ValidationError
from .prior import CondProbMatrix
from .seeding import STREAM_INIT, rng_for

MODEL_FORMAT_HEADER = "coocrefine-gcn v1"


@dataclass(frozen=True)
class GcnModel:
    """Stack of per-layer weight matrices plus architecture metadata.

    ``layer_dims`` lists per-node feature widths, starting and ending at 1
    (one scalar logit in and out per class node).
    """

    layer_dims: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    leaky_slope: float = 0.01
    final_nonlinearity: bool = False

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2:
            raise ValidationError("need at least one layer")
        if dims[0] != 1 or dims[-1] != 1:
            raise ValidationError("first and last layer widths must be 1")
        if any(d < 1 for d in dims):
            raise ValidationError("layer widths must be positive")
        if len(self.weights) != len(dims) - 1:
            raise ValidationError("weight count does not match layer_dims")
        frozen = []
        for l, w in enumerate(self.weights):
            w = frozen_array(w, np.float64)
            if w.shape != (dims[l], dims[l + 1]):
                raise ValidationError(
                    f"layer {l + 1} weights must have shape {(dims[l], dims[l + 1])}"
                )
            if not np.isfinite(w).all():
                raise ValidationError(f"layer {l + 1} weights contain non-finite values")
            frozen.append(w)
        object.__setattr__(self, "weights", tuple(frozen))
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValidationError("leaky_slope must be in (0, 1)")

    @property
    def n_layers(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class GcnGradients:
    """Gradients w.r.t. every weight matrix and the input logits."""

    d_weights: tuple[np.ndarray, ...]
    d_input: np.ndarray             # (batch, N)

    def __post_init__(self):
        object.__setattr__(self, "d_weights", tuple(self.d_weights))
        for g in self.d_weights:
            if not np.isfinite(g).all():
                raise NumericError("non-finite weight gradient")
        if not np.isfinite(self.d_input).all():
            raise NumericError("non-finite input gradient")


@dataclass(frozen=True)
class GcnCache:
    """Forward intermediates needed by the backward pass."""

    propagated: tuple[np.ndarray, ...]   # P @ H_{l-1} per layer, (batch, N, d_{l-1})
    pre_acts: tuple[np.ndarray, ...]     # pre-activation Z_l per layer, (batch, N, d_l)


def init_model(
    layer_dims,
    leaky_slope: float = 0.01,
    seed: int = 0,
    final_nonlinearity: bool = False,
) -> GcnModel:
    """Seeded Glorot-uniform initialization.

    Layer l's entries are i.i.d. uniform in +-sqrt(6 / (d_{l-1} + d_l)).
    """
    dims = tuple(int(d) for d in layer_dims)
    if len(dims) < 2 or dims[0] != 1 or dims[-1] != 1:
        raise ValidationError("layer_dims must start and end with width 1")
    rng = rng_for(seed, STREAM_INIT)
    weights = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-bound, bound, size=(d_in, d_out)))
    return GcnModel(dims, tuple(weights), leaky_slope, final_nonlinearity)


def propagation_matrix(cond: CondProbMatrix) -> np.ndarray:
    """Row-normalized propagation operator derived from the conditional matrix.

    Each row is divided by its sum, so a node aggregates a weighted
    average of its co-occurrence neighborhood and the operator's gain is
    bounded by 1 regardless of how dense co-occurrence is. Without this,
    stacking layers multiplies activations by the matrix's spectral
    radius (easily 5-10 on strongly clustered data) per layer, saturating
    every sigmoid at initialization and making training unrecoverable.
    Identity rows (never-seen classes) are unchanged, so their locality
    is preserved. Rows always sum to at least 1 (unit diagonal), so the
    division is safe.
    """
    probs = cond.probs
    return probs / probs.sum(axis=1, keepdims=True)


def _leaky(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z >= 0, z, slope * z)


def _dleaky(z: np.ndarray, slope: float) -> np.ndarray:
    # subgradient at 0 takes the positive branch
    return np.where(z >= 0, 1.0, slope)


def _activated(model: GcnModel, layer: int) -> bool:
    return layer < model.n_layers - 1 or model.final_nonlinearity


def gcn_forward(
    model: GcnModel, cond: CondProbMatrix, h0: np.ndarray
) -> tuple[np.ndarray, GcnCache]:
    """Refine a batch of per-class logits; returns (refined, cache).

    ``h0`` has one row per sample and one column per class node. The
    returned cache feeds ``gcn_backward``.
    """
    h0 = np.asarray(h0, dtype=np.float64)
    if h0.ndim != 2:
        raise ValidationError("h0 must be a 2-d (batch, classes) matrix")
    n = cond.n_classes
    if h0.shape[1] != n:
        raise ValidationError(
            f"h0 has {h0.shape[1]} classes but the propagation matrix has {n}"
        )
    if not np.isfinite(h0).all():
        raise NumericError("non-finite value in input logits")

    prop = propagation_matrix(cond)
    h = h0[:, :, None]
    propagated = []
    pre_acts = []
    for l, w in enumerate(model.weights):
        with np.errstate(over="ignore", invalid="ignore"):
            m = np.matmul(prop, h)      # (batch, N, d_{l-1})
            z = m @ w                   # (batch, N, d_l)
        if not np.isfinite(z).all():
            raise NumericError(f"non-finite value at layer {l + 1}")
        propagated.append(m)
        pre_acts.append(z)
        h = _leaky(z, model.leaky_slope) if _activated(model, l) else z
    refined = h0 + h[:, :, 0]
    return refined, GcnCache(tuple(propagated), tuple(pre_acts))


def gcn_backward(
    model: GcnModel,
    cond: CondProbMatrix,
    cache: GcnCache,
    grad_refined: np.ndarray,
) -> GcnGradients:
    """Exact reverse-mode gradients of the refined output.

    ``grad_refined`` is the upstream gradient w.r.t. the refined logits;
    the result carries gradients for every weight matrix and for the
    input logits (the latter includes the residual identity term).
    Gradients over a batch are accumulated in fixed order, so results are
    reproducible.
    """
    n_layers = model.n_layers
    if len(cache.pre_acts) != n_layers or len(cache.propagated) != n_layers:
        raise ValidationError("cache does not match the model's layer count")
    grad_refined = np.asarray(grad_refined, dtype=np.float64)
    if grad_refined.shape != cache.pre_acts[-1].shape[:2]:
        raise ValidationError(
            f"grad_refined shape {grad_refined.shape} does not match "
            f"forward batch shape {cache.pre_acts[-1].shape[:2]}"
        )
    batch = grad_refined.shape[0]
    for l in range(n_layers):
        if cache.propagated[l].shape != (batch, cond.n_classes, model.layer_dims[l]):
            raise ValidationError("cache does not match the model/input shapes")
        if cache.pre_acts[l].shape != (batch, cond.n_classes, model.layer_dims[l + 1]):
            raise ValidationError("cache does not match the model/input shapes")

    prop_t = propagation_matrix(cond).T
    g = grad_refined[:, :, None]
    d_weights: list[np.ndarray | None] = [None] * n_layers
    for l in range(n_layers - 1, -1, -1):
        if _activated(model, l):
            g = g * _dleaky(cache.pre_acts[l], model.leaky_slope)
        m = cache.propagated[l]
        d_in, d_out = model.weights[l].shape
        # sum over batch and nodes in one fixed-order GEMM
        d_weights[l] = m.reshape(-1, d_in).T @ g.reshape(-1, d_out)
        g = np.matmul(prop_t, g @ model.weights[l].T)
    d_input = g[:, :, 0] + grad_refined
    return GcnGradients(tuple(d_weights), d_input)


def save_model(model: GcnModel, path) -> None:
    """Serialize a model in the documented ``coocrefine-gcn v1`` format."""
    lines = [
        MODEL_FORMAT_HEADER,
        "layer_dims " + " ".join(str(d) for d in model.layer_dims),
        f"leaky_slope {model.leaky_slope!r}",
        f"final_nonlinearity {int(model.final_nonlinearity)}",
    ]
    for l, w in enumerate(model.weights):
        lines.append(f"weights {l} {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> GcnModel:
    """Parse a ``coocrefine-gcn v1`` model file."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ValidationError(f"file not found: {path}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None

    def fail(msg: str):
        raise ValidationError(f"{path}: bad model file: {msg}")

    if not lines or lines[0] != MODEL_FORMAT_HEADER:
        fail(f"expected header '{MODEL_FORMAT_HEADER}'")
    try:
        dims_tok = lines[1].split()
        if dims_tok[0] != "layer_dims":
            fail("expected layer_dims")
        dims = tuple(int(t) for t in dims_tok[1:])
        slope_tok = lines[2].split()
        if slope_tok[0] != "leaky_slope" or len(slope_tok) != 2:
            fail("expected leaky_slope")
        slope = float(slope_tok[1])
        final_tok = lines[3].split()
        if final_tok[0] != "final_nonlinearity" or final_tok[1] not in ("0", "1"):
            fail("expected final_nonlinearity 0|1")
        final = final_tok[1] == "1"
    except (IndexError, ValueError):
        raise ValidationError(f"{path}: bad model file: truncated or malformed header") from None

    weights = []
    cursor = 4
    for l in range(len(dims) - 1):
        if cursor >= len(lines):
            fail(f"missing weights block {l}")
        head = lines[cursor].split()
        if len(head) != 4 or head[0] != "weights" or int(head[1]) != l:
            fail(f"expected 'weights {l} <rows> <cols>' at line {cursor + 1}")
        rows, cols = int(head[2]), int(head[3])
        cursor += 1
        block = np.empty((rows, cols), dtype=np.float64)
        for r in range(rows):
            if cursor >= len(lines):
                fail(f"truncated weights block {l}")
            cells = lines[cursor].split()
            if len(cells) != cols:
                fail(f"line {cursor + 1}: expected {cols} values, got {len(cells)}")
            try:
                block[r] = [float(c) for c in cells]
            except ValueError:
                fail(f"line {cursor + 1}: invalid float")
            cursor += 1
        weights.append(block)
    if cursor != len(lines):
        fail("trailing content after weight blocks")
    return GcnModel(dims, tuple(weights), slope, final)


def with_weights(model: GcnModel, weights) -> GcnModel:
    """Copy of the model with replaced weight matrices."""
    return replace(model, weights=tuple(weights))
