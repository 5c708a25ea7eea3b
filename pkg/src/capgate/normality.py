"""Anderson-Darling normality screening.

Used by the batch engine to route each dimension to the analytic or the
bootstrap failure-probability path. The test is the composite case with
mean and variance estimated from the data, using the small-sample
modification and the standard critical-value table for that case.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import DomainError, InsufficientData

__all__ = ["anderson_darling", "critical_value", "classify_normality"]

_MIN_N = 8

# Upper-tail critical values for the modified statistic, normal family,
# both parameters estimated (Stephens). Keys are significance levels.
_CRITICAL = ((0.15, 0.576), (0.10, 0.656), (0.05, 0.787), (0.025, 0.918), (0.01, 1.092))


def anderson_darling(values: Sequence[float]) -> float:
    """Modified Anderson-Darling statistic A^2 * (1 + 0.75/n + 2.25/n^2).

    Parameters are estimated from the sample (mean, sd with n-1 divisor).
    """
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = x.shape[0]
    if n < _MIN_N:
        raise InsufficientData(f"need n >= {_MIN_N} for the normality test, got {n}")
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        return math.inf
    w = (x - float(np.mean(x))) / sd
    # log Phi(w) and log Phi(-w) straight from erfc to keep tail accuracy
    log_z = [math.log(max(0.5 * math.erfc(-wi / math.sqrt(2.0)), 5e-324)) for wi in w]
    log_zc = [math.log(max(0.5 * math.erfc(wi / math.sqrt(2.0)), 5e-324)) for wi in w]
    i = np.arange(1, n + 1)
    s = float(np.sum((2 * i - 1) * (np.array(log_z) + np.array(log_zc)[::-1]))) / n
    a2 = -n - s
    return a2 * (1.0 + 0.75 / n + 2.25 / n**2)


def critical_value(level: float) -> float:
    """Critical value at a significance level in [0.01, 0.15].

    Table nodes are exact; intermediate levels use log-linear
    interpolation.
    """
    levels = [lv for lv, _ in _CRITICAL]
    cvs = [cv for _, cv in _CRITICAL]
    if not levels[-1] <= level <= levels[0]:
        raise DomainError(
            f"level must be within [{levels[-1]}, {levels[0]}], got {level}"
        )
    for lv, cv in _CRITICAL:
        if level == lv:
            return cv
    logs = [math.log(lv) for lv in levels]
    for j in range(len(logs) - 1):
        if logs[j] >= math.log(level) >= logs[j + 1]:
            t = (math.log(level) - logs[j]) / (logs[j + 1] - logs[j])
            return cvs[j] + t * (cvs[j + 1] - cvs[j])
    raise DomainError(f"level {level} outside interpolation range")


def classify_normality(values: Sequence[float], level: float = 0.05) -> bool:
    """True when the sample is consistent with normality at the level.

    The statistic must not exceed the critical value; larger samples of
    genuinely skewed data essentially always fail.
    """
    return anderson_darling(values) <= critical_value(level)
