"""Deterministic random-number streams.

All randomness in the package flows from one user-facing 64-bit seed.
Each consumer derives its own independent stream by combining that seed
with a fixed stream tag (plus optional extras such as the epoch index),
so adding a consumer never perturbs the draws seen by existing ones.

Bit generator is Philox (64-bit counter-based). Gaussian variates are
produced by an explicit Box-Muller transform over Philox uniforms so the
sampling algorithm is pinned by this module rather than inherited from
library internals. Identical seeds give bit-identical output within this
implementation.
"""

from __future__ import annotations

import numpy as np

# Stream tags: the documented fan-out of the single --seed value.
STREAM_SYNTH = 1   # synthetic dataset generation
STREAM_SPLIT = 2   # train/test splitting
STREAM_BATCH = 3   # per-epoch batch shuffling (extra = epoch index)
STREAM_INIT = 4    # model weight initialization


def rng_for(seed: int, stream: int, *extra: int) -> np.random.Generator:
    """Philox generator keyed by (seed, stream, *extra)."""
    entropy = [int(seed), int(stream), *(int(e) for e in extra)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def gaussian(rng: np.random.Generator, shape, std: float = 1.0) -> np.ndarray:
    """Normal(0, std^2) deviates via Box-Muller.

    Uses u1 in (0, 1] so the log stays finite; pairs of uniforms yield
    pairs of deviates (cos/sin branches) and the surplus one is dropped
    for odd counts.
    """
    n = int(np.prod(shape)) if shape else 1
    if n == 0:
        return np.zeros(shape)
    half = (n + 1) // 2
    u1 = 1.0 - rng.random(half)
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    return (std * z).reshape(shape)
