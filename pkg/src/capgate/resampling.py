"""Bootstrap failure probability for assumption-free approval.

Nonparametric iid resampling (size n, with replacement) of one sample;
each resample yields a plug-in capability estimate, and the failure
probability is the fraction of resampled estimates below the threshold.
A counter-based generator keyed by the seed makes results reproducible
and independent of call order or parallel scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .capability import SpecLimits, estimate_cpk, summarize
from .errors import DegenerateSample, DomainError, InsufficientData
from .rules import Decision

__all__ = ["BootstrapConfig", "BootstrapResult", "bootstrap_p_fail", "bootstrap_decide"]

_MIN_SAMPLE = 5
_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class BootstrapConfig:
    """Resample count and RNG seed. b_boot below 100 is refused: the
    granularity of p_fail (1/b_boot) would exceed any useful alpha."""

    b_boot: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.b_boot < 100:
            raise DomainError(f"b_boot must be >= 100, got {self.b_boot}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class BootstrapResult:
    """p_fail is an exact multiple of 1/b_boot; se_boot is the sd (n-1
    divisor) of the non-degenerate replicate estimates."""

    p_fail: float
    se_boot: float
    n_degenerate: int


def _replicate_values(
    values: np.ndarray, limits: SpecLimits, cfg: BootstrapConfig
) -> np.ndarray:
    """Replicate capability estimates, one per resample.

    Zero-dispersion resamples cannot produce a finite estimate; they are
    scored by where their (constant) mean sits: strictly inside the
    limits counts as unboundedly capable (+inf), at or outside as
    incapable (-inf). Re-drawing them would bias the resampling
    distribution, so they stay in, flagged via n_degenerate.
    """
    n = values.shape[0]
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    out = np.empty(cfg.b_boot, dtype=np.float64)
    chunk = max(1, _CHUNK_ELEMENTS // n)
    done = 0
    while done < cfg.b_boot:
        b = min(chunk, cfg.b_boot - done)
        idx = rng.integers(0, n, size=(b, n))
        mean, sd, cpk = _kernels.row_capability(values[idx], limits.lsl, limits.usl)
        degenerate = sd == 0.0
        if degenerate.any():
            inside = (limits.lsl < mean) & (mean < limits.usl)
            cpk[degenerate & inside] = np.inf
            cpk[degenerate & ~inside] = -np.inf
        out[done : done + b] = cpk
        done += b
    return out


def _check_sample(sample: Sequence[float]) -> np.ndarray:
    values = np.asarray(sample, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < _MIN_SAMPLE:
        raise InsufficientData(
            f"bootstrap needs a 1-d sample of at least {_MIN_SAMPLE} values"
        )
    if values.min() == values.max():
        raise DegenerateSample("constant sample; bootstrap undefined")
    return values


def bootstrap_p_fail(
    sample: Sequence[float], limits: SpecLimits, c0: float, cfg: BootstrapConfig
) -> BootstrapResult:
    """Empirical probability that the capability lies below c0.

    Deterministic given (sample, cfg): the same seed always produces the
    same resamples regardless of thread count or call order.
    """
    values = _check_sample(sample)
    reps = _replicate_values(values, limits, cfg)
    finite = np.isfinite(reps)
    n_degenerate = int(reps.size - finite.sum())
    p_fail = float(np.count_nonzero(reps < c0)) / cfg.b_boot
    if finite.sum() >= 2:
        se_boot = float(np.std(reps[finite], ddof=1))
    else:
        se_boot = 0.0
    return BootstrapResult(p_fail=p_fail, se_boot=se_boot, n_degenerate=n_degenerate)


def _quantile_index(alpha: float, b_boot: int) -> int:
    """Largest integer m with m / b_boot <= alpha, evaluated in the same
    float arithmetic as the acceptance comparison."""
    m = int(math.floor(alpha * b_boot))
    while m + 1 <= b_boot and (m + 1) / b_boot <= alpha:
        m += 1
    while m > 0 and m / b_boot > alpha:
        m -= 1
    return min(m, b_boot - 1)


def bootstrap_decide(
    sample: Sequence[float],
    limits: SpecLimits,
    c0: float,
    alpha: float,
    cfg: BootstrapConfig,
) -> Decision:
    """Accept when the bootstrap failure probability is <= alpha.

    The margin fields report the empirical-quantile equivalent of the
    guard band: the decision is the same as requiring the alpha-quantile
    of the replicate estimates to reach c0, so margin = cpk_hat - q_alpha
    and k is the implied constant margin / se_boot (NaN when se_boot is
    zero).
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    values = _check_sample(sample)
    summary = summarize(values.tolist())
    cpk_hat = estimate_cpk(summary, limits)

    reps = _replicate_values(values, limits, cfg)
    finite = np.isfinite(reps)
    p_fail = float(np.count_nonzero(reps < c0)) / cfg.b_boot
    se_boot = float(np.std(reps[finite], ddof=1)) if finite.sum() >= 2 else 0.0

    q = float(np.sort(reps)[_quantile_index(alpha, cfg.b_boot)])
    margin = cpk_hat - q
    k = margin / se_boot if se_boot > 0 else math.nan
    return Decision(
        accept=p_fail <= alpha,
        k=k,
        margin=margin,
        effective_threshold=c0 + margin,
        p_fail=p_fail,
    )
