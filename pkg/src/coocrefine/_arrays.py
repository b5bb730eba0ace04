"""Internal helper for immutable array fields."""

from __future__ import annotations

import numpy as np


def frozen_array(values, dtype) -> np.ndarray:
    """Contiguous read-only copy that never aliases caller memory.

    Value types freeze their arrays; copying first keeps the caller's
    array writable and the stored one safe from later mutation.
    """
    out = np.array(values, dtype=dtype, order="C", copy=True)
    out.setflags(write=False)
    return out
