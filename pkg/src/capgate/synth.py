"""Synthetic multi-dimension capability datasets.

Stand-in for proprietary shop-floor data: a configurable mixture of
normal and skewed (shifted lognormal) dimensions whose estimated
capabilities land in prescribed regions, including a near-threshold
band where approval rules actually disagree. Deterministic given the
seed, down to the serialized CSV bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .batch import DimensionRecord, records_to_csv_text
from .capability import SpecLimits, sigma_for_target
from .errors import CapgateError, DomainError

__all__ = ["SynthSpec", "synth_dataset", "write_records_csv"]

_MAX_TRIES = 1000


@dataclass(frozen=True)
class SynthSpec:
    """Dataset shape: counts, capability mixture, and band targets.

    near_frac of the dimensions get estimates inside the near band
    |cpk_hat - c0| <= near_band (half below, half above the threshold);
    the rest are spread below/above so that frac_below of all estimates
    end up sub-threshold. frac_nonnormal of dimensions draw from a
    skewed generator matched to the same mean and sd.
    """

    n_dims: int = 200
    n_per_dim: int = 32
    frac_nonnormal: float = 0.35
    frac_below: float = 0.5
    near_frac: float = 0.2
    near_band: float = 0.1
    c0: float = 1.33
    limits: SpecLimits = SpecLimits(-4.0, 4.0)
    log_sd_s: float = 1.0
    cpk_low: float = 0.5
    cpk_high: float = 2.5

    def __post_init__(self):
        if self.n_dims < 1:
            raise DomainError("need at least one dimension")
        if self.n_per_dim < 8:
            raise DomainError("need at least 8 measurements per dimension")
        for name in ("frac_nonnormal", "frac_below", "near_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 < self.near_band < self.c0:
            raise DomainError("near_band must be in (0, c0)")
        if not self.cpk_low < self.c0 - self.near_band:
            raise DomainError("cpk_low must sit below the near band")
        if not self.cpk_high > self.c0 + self.near_band:
            raise DomainError("cpk_high must sit above the near band")


def _draw_normal(rng, n, mid, sigma):
    return mid + sigma * rng.standard_normal(n)


def _draw_lognormal(rng, n, mid, sigma, s):
    # Affine-transformed logN(0, s^2) with mean mid and sd sigma: the
    # plug-in estimate then behaves like the normal case while the shape
    # stays skewed enough to fail a normality screen.
    ey = math.exp(0.5 * s * s)
    sdy = ey * math.sqrt(math.expm1(s * s))
    scale = sigma / sdy
    return scale * rng.lognormal(0.0, s, n) + (mid - scale * ey)


def _estimate(values, limits: SpecLimits) -> float:
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1))
    if sd == 0.0:
        return math.nan
    return min(limits.usl - mean, mean - limits.lsl) / (3.0 * sd)


def synth_dataset(spec: SynthSpec, seed: int) -> list[DimensionRecord]:
    """Generate dimension records matching the mixture spec.

    Sampling is rejection-based: each dimension redraws until its
    estimated capability lands in its assigned region, so band and
    below-threshold occupancies hold by construction rather than on
    average.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0x5D])))
    n_near = round(spec.near_frac * spec.n_dims)
    n_below_total = round(spec.frac_below * spec.n_dims)
    # split the near band evenly, clamped so the global below count stays feasible
    lo_feasible = max(0, n_below_total - (spec.n_dims - n_near))
    hi_feasible = min(n_near, n_below_total)
    n_near_below = min(max((n_near + 1) // 2, lo_feasible), hi_feasible)
    n_near_above = n_near - n_near_below
    n_far_below = n_below_total - n_near_below
    n_far_above = spec.n_dims - n_near - n_far_below

    c0, band = spec.c0, spec.near_band
    regions = (
        [("near_below", (c0 - band, c0))] * n_near_below
        + [("near_above", (c0, c0 + band))] * n_near_above
        + [("far_below", (spec.cpk_low, c0 - band))] * n_far_below
        + [("far_above", (c0 + band, spec.cpk_high))] * n_far_above
    )
    rng.shuffle(regions)

    n_nonnormal = round(spec.frac_nonnormal * spec.n_dims)
    shapes = np.array(["lognormal"] * n_nonnormal + ["normal"] * (spec.n_dims - n_nonnormal))
    rng.shuffle(shapes)

    mid = spec.limits.midpoint
    half = spec.limits.half_width
    records = []
    for i, ((kind, (lo, hi)), shape) in enumerate(zip(regions, shapes)):
        target = rng.uniform(lo, hi)
        sigma = sigma_for_target(half, target)
        for attempt in range(_MAX_TRIES):
            if shape == "normal":
                values = _draw_normal(rng, spec.n_per_dim, mid, sigma)
            else:
                values = _draw_lognormal(rng, spec.n_per_dim, mid, sigma, spec.log_sd_s)
            est = _estimate(values, spec.limits)
            if math.isnan(est):
                continue
            if kind == "near_below" and lo <= est < c0:
                break
            if kind == "near_above" and c0 <= est <= hi:
                break
            if kind == "far_below" and lo <= est < c0 - band:
                break
            if kind == "far_above" and c0 + band < est <= hi:
                break
        else:
            raise CapgateError(
                f"could not place dimension {i} in region {kind} after {_MAX_TRIES} tries"
            )
        records.append(
            DimensionRecord(
                id=f"D{i + 1:04d}",
                limits=spec.limits,
                measurements=tuple(float(v) for v in values),
            )
        )
    return records


def write_records_csv(records, path) -> None:
    """Serialize records as long-form CSV; byte-identical for a fixed seed."""
    text = records_to_csv_text(records)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
