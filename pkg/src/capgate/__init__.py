"""Risk-calibrated process-capability approval.

Capability estimation with finite-sample standard errors, a unified
guard-band family of accept/reject rules calibrated by failure
probability or cost ratio, a bootstrap fallback for non-normal data, a
Monte Carlo harness for operating characteristics, and a batch engine
for multi-dimension approval with reclassification and empirical-risk
reporting.
"""

__version__ = "0.1.0"

from .capability import (
    CapabilityEstimate,
    ProcessParams,
    SampleSummary,
    SpecLimits,
    estimate_cpk,
    failure_probability_analytic,
    normal_cdf,
    normal_quantile,
    se_plugin,
    sigma_c,
    sigma_for_target,
    summarize,
    true_cpk,
)
from .errors import (
    CalibrationFailure,
    CapgateError,
    ConsistencyError,
    DegenerateSample,
    DomainError,
    InsufficientData,
    ParseError,
)
from .normality import anderson_darling, classify_normality
from .resampling import BootstrapConfig, BootstrapResult, bootstrap_decide, bootstrap_p_fail
from .rules import (
    CostSensitive,
    Decision,
    Deterministic,
    FailureProbability,
    LossSpec,
    LowerConfidenceBound,
    Rule,
    alpha_from_lambda,
    boundary_acceptance,
    decide,
    expected_loss_point,
    k_from_alpha,
    k_of_rule,
    lcb,
    local_acceptance,
)
