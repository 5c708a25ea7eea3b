"""Pure-numpy implementations of the hot row kernels.

Same surface as the compiled extension; selected at import time by the
package __init__ when the extension is unavailable or disabled.
"""

from __future__ import annotations

import numpy as np


def row_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row mean and sd (n-1 divisor) of a 2-D float64 array."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    mean = x.mean(axis=1)
    sd = x.std(axis=1, ddof=1)
    return mean, sd


def row_capability(
    x: np.ndarray, lsl: float, usl: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-row mean, sd (n-1 divisor), and plug-in capability index.

    Rows with zero dispersion get cpk = NaN; callers decide the policy.
    """
    mean, sd = row_stats(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        cpk = np.minimum(usl - mean, mean - lsl) / (3.0 * sd)
    cpk[sd == 0.0] = np.nan
    return mean, sd, cpk
