"""Guard-band approval rules.

All four approval rules reduce to one calibration constant k: accept when
cpk_hat >= c0 + k * se. Deterministic thresholding is k = 0; lower
confidence bound, tolerated-failure-probability, and cost-ratio rules
pick k from standard normal quantiles. The mappings lambda -> alpha -> k
live here, along with the closed-form acceptance probabilities used to
cross-check the Monte Carlo harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from .capability import (
    CapabilityEstimate,
    failure_probability_analytic,
    normal_cdf,
    normal_quantile,
    sigma_c,
)
from .errors import DomainError

__all__ = [
    "Deterministic",
    "LowerConfidenceBound",
    "FailureProbability",
    "CostSensitive",
    "Rule",
    "Decision",
    "LossSpec",
    "alpha_from_lambda",
    "k_from_alpha",
    "k_of_rule",
    "rule_label",
    "decide",
    "lcb",
    "boundary_acceptance",
    "local_acceptance",
    "expected_loss_point",
]


@dataclass(frozen=True)
class Deterministic:
    """Accept when cpk_hat >= c0; no uncertainty margin."""


@dataclass(frozen=True)
class LowerConfidenceBound:
    """Accept when the one-sided (1-gamma) lower confidence bound >= c0."""

    gamma: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must be in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class FailureProbability:
    """Accept when the estimated failure probability is <= alpha."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class CostSensitive:
    """Accept per asymmetric loss with cost ratio lam = c_fa / c_fr.

    lam < 1 is rejected at construction: it would produce a negative
    margin (an anti-conservative rule). Use FailureProbability with
    alpha > 0.5 if that is genuinely wanted.
    """

    lam: float

    def __post_init__(self):
        if not self.lam >= 1.0:
            raise DomainError(f"cost ratio must be >= 1, got {self.lam}")


Rule = Union[Deterministic, LowerConfidenceBound, FailureProbability, CostSensitive]


@dataclass(frozen=True)
class Decision:
    """Outcome of one approval rule applied to one estimate.

    margin == k * se and accept == (cpk_hat >= effective_threshold) for
    the analytic rules; bootstrap decisions fill the same fields with
    their empirical-quantile equivalents. p_fail is attached for every
    rule so downstream reports never recompute it inconsistently.
    """

    accept: bool
    k: float
    margin: float
    effective_threshold: float
    p_fail: Optional[float] = None


@dataclass(frozen=True)
class LossSpec:
    """Costs of a false accept and a false reject, both > 0."""

    c_fa: float
    c_fr: float

    def __post_init__(self):
        if not (self.c_fa > 0 and self.c_fr > 0):
            raise DomainError("both costs must be > 0")

    @property
    def lam(self) -> float:
        return self.c_fa / self.c_fr


def alpha_from_lambda(lam: float) -> float:
    """Tolerated failure probability implied by a cost ratio: 1 / (1 + lam)."""
    if not lam > 0:
        raise DomainError(f"cost ratio must be > 0, got {lam}")
    return 1.0 / (1.0 + lam)


def k_from_alpha(alpha: float) -> float:
    """Calibration constant for a tolerated failure probability.

    k = Phi^-1(1 - alpha): zero at alpha = 0.5, positive below it.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    return normal_quantile(1.0 - alpha)


def k_of_rule(rule: Rule) -> float:
    """Calibration constant of any rule in the guard-band family."""
    if isinstance(rule, Deterministic):
        return 0.0
    if isinstance(rule, LowerConfidenceBound):
        return normal_quantile(1.0 - rule.gamma)
    if isinstance(rule, FailureProbability):
        return k_from_alpha(rule.alpha)
    if isinstance(rule, CostSensitive):
        return k_from_alpha(alpha_from_lambda(rule.lam))
    raise TypeError(f"not a rule: {rule!r}")


def rule_label(rule: Rule) -> str:
    """Short stable identifier used in CSV output and reports."""
    if isinstance(rule, Deterministic):
        return "deterministic"
    if isinstance(rule, LowerConfidenceBound):
        return f"lcb_gamma={rule.gamma:g}"
    if isinstance(rule, FailureProbability):
        return f"prob_alpha={rule.alpha:g}"
    if isinstance(rule, CostSensitive):
        return f"cost_lambda={rule.lam:g}"
    raise TypeError(f"not a rule: {rule!r}")


def decide(rule: Rule, estimate: CapabilityEstimate, c0: float) -> Decision:
    """Apply one approval rule: accept iff cpk_hat >= c0 + k * se.

    Ties at the threshold accept (>=). The analytic failure probability
    is attached regardless of which rule decided.
    """
    k = k_of_rule(rule)
    margin = k * estimate.se
    threshold = c0 + margin
    return Decision(
        accept=estimate.cpk_hat >= threshold,
        k=k,
        margin=margin,
        effective_threshold=threshold,
        p_fail=failure_probability_analytic(estimate.cpk_hat, estimate.se, c0),
    )


def lcb(estimate: CapabilityEstimate, gamma: float) -> float:
    """One-sided lower confidence bound: cpk_hat - z_{1-gamma} * se."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must be in (0, 1), got {gamma}")
    return estimate.cpk_hat - normal_quantile(1.0 - gamma) * estimate.se


def boundary_acceptance(k: float) -> float:
    """Asymptotic acceptance probability at the approval boundary: Phi(-k)."""
    return normal_cdf(-k)


def local_acceptance(cpk_true: float, c0: float, n: int, k: float) -> float:
    """Asymptotic acceptance probability of the k-rule near the boundary.

    Phi(sqrt(n) (cpk_true - c0) / sigma_c(cpk_true) - k). Valid in the
    one-sided active-constraint regime.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    z = math.sqrt(n) * (cpk_true - c0) / sigma_c(cpk_true) - k
    return normal_cdf(z)


def expected_loss_point(
    p_fa: float, p_fr: float, loss: LossSpec, state_below: bool
) -> float:
    """Expected operational loss at one true state.

    c_fa * p_fa when the true capability is below the threshold, else
    c_fr * p_fr.
    """
    for name, p in (("p_fa", p_fa), ("p_fr", p_fr)):
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"{name} must be in [0, 1], got {p}")
    if state_below:
        return loss.c_fa * p_fa
    return loss.c_fr * p_fr
