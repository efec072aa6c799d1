"""Dense feature transform: log compression of counts, then z-score (see DenseStats)."""

import math
from typing import Optional, Sequence

import numpy as np


def transform_dense(raw: Optional[int]) -> float:
    """Pre-standardisation transform: missing -> 0.0, v -> ln(1 + max(v, 0))."""
    if raw is None:
        return 0.0
    return math.log1p(max(raw, 0))


def transform_dense_rows(rows: Sequence[Sequence[Optional[int]]], num_dense: int) -> np.ndarray:
    """Vectorised transform_dense over a list of raw dense rows."""
    out = np.zeros((len(rows), num_dense), dtype=np.float64)
    for i, row in enumerate(rows):
        for j, value in enumerate(row):
            if value is not None and value > 0:
                out[i, j] = value
    return np.log1p(out)
