import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from capgate.capability import CapabilityEstimate, failure_probability_analytic, se_plugin
from capgate.errors import DomainError
from capgate.rules import (
    CostSensitive,
    Deterministic,
    FailureProbability,
    LossSpec,
    LowerConfidenceBound,
    alpha_from_lambda,
    boundary_acceptance,
    decide,
    expected_loss_point,
    k_from_alpha,
    k_of_rule,
    lcb,
    local_acceptance,
    rule_label,
)

C0 = 1.33

estimates = st.builds(
    CapabilityEstimate,
    cpk_hat=st.floats(-2.0, 4.0),
    se=st.floats(0.01, 1.0),
    n=st.integers(2, 500),
)


class TestRuleTypes:
    def test_parameter_domains(self):
        with pytest.raises(DomainError):
            LowerConfidenceBound(0.0)
        with pytest.raises(DomainError):
            FailureProbability(1.0)
        with pytest.raises(DomainError):
            CostSensitive(0.5)
        # research-grade anti-conservative rules remain reachable this way
        FailureProbability(0.7)

    def test_labels(self):
        assert rule_label(Deterministic()) == "deterministic"
        assert rule_label(CostSensitive(19)) == "cost_lambda=19"


class TestCalibrationMappings:
    @pytest.mark.parametrize(
        "lam,alpha", [(1, 0.50), (4, 0.20), (9, 0.10), (19, 0.05), (99, 0.01)]
    )
    def test_alpha_table(self, lam, alpha):
        assert alpha_from_lambda(lam) == pytest.approx(alpha, abs=1e-12)

    def test_alpha_domain(self):
        with pytest.raises(DomainError):
            alpha_from_lambda(0.0)
        with pytest.raises(DomainError):
            alpha_from_lambda(-3.0)

    @pytest.mark.parametrize(
        "alpha,k",
        [(0.50, 0.0), (0.20, 0.842), (0.10, 1.282), (0.05, 1.645), (0.01, 2.326)],
    )
    def test_k_table(self, alpha, k):
        assert k_from_alpha(alpha) == pytest.approx(k, abs=1e-3)

    def test_k_exact_zero_at_half(self):
        assert k_from_alpha(0.5) == 0.0

    def test_k_domain(self):
        with pytest.raises(DomainError):
            k_from_alpha(0.0)

    def test_k_of_rule(self):
        assert k_of_rule(Deterministic()) == 0.0
        assert k_of_rule(LowerConfidenceBound(0.05)) == pytest.approx(1.645, abs=1e-3)
        assert k_of_rule(CostSensitive(19)) == pytest.approx(1.645, abs=1e-3)
        assert k_of_rule(FailureProbability(0.01)) == pytest.approx(2.326, abs=1e-3)

    def test_cost_and_probability_share_k(self):
        assert k_of_rule(CostSensitive(19)) == k_of_rule(FailureProbability(0.05))


class TestDecide:
    def test_deterministic_accept(self):
        est = CapabilityEstimate(1.40, 0.10, 32)
        d = decide(Deterministic(), est, C0)
        assert d.accept and d.k == 0.0 and d.margin == 0.0
        assert d.effective_threshold == C0
        assert d.p_fail == failure_probability_analytic(1.40, 0.10, C0)

    def test_cost_sensitive_reject_near_boundary(self):
        est = CapabilityEstimate(1.40, 0.10, 32)
        d = decide(CostSensitive(19), est, C0)
        assert not d.accept
        assert d.effective_threshold == pytest.approx(1.4945, abs=1e-3)
        assert d.margin == pytest.approx(d.k * est.se, abs=0)

    def test_cost_sensitive_accept_with_headroom(self):
        est = CapabilityEstimate(1.70, 0.10, 32)
        assert decide(CostSensitive(19), est, C0).accept

    def test_tie_accepts(self):
        est = CapabilityEstimate(C0, 0.10, 32)
        assert decide(Deterministic(), est, C0).accept

    @settings(max_examples=500)
    @given(estimates, st.floats(1.0, 200.0))
    def test_cost_probability_equivalence(self, est, lam):
        a = decide(CostSensitive(lam), est, C0).accept
        b = decide(FailureProbability(1.0 / (1.0 + lam)), est, C0).accept
        assert a == b

    @settings(max_examples=500)
    @given(estimates, st.floats(0.01, 0.5))
    def test_lcb_equivalence(self, est, gamma):
        bound = lcb(est, gamma)
        # skip exact float ties between the two algebraic forms
        if abs(bound - C0) < 1e-9 * max(1.0, abs(bound)):
            return
        assert decide(LowerConfidenceBound(gamma), est, C0).accept == (bound >= C0)

    @settings(max_examples=300)
    @given(estimates, st.floats(0.0, 3.0), st.floats(0.0, 3.0))
    def test_accept_set_shrinks_in_k(self, est, k1, dk):
        k_lo, k_hi = k1, k1 + dk
        lo = est.cpk_hat >= C0 + k_lo * est.se
        hi = est.cpk_hat >= C0 + k_hi * est.se
        assert lo or not hi  # hi-accept implies lo-accept

    @settings(max_examples=300)
    @given(estimates)
    def test_guard_band_subset_of_deterministic(self, est):
        det = decide(Deterministic(), est, C0).accept
        cal = decide(CostSensitive(10), est, C0).accept
        assert det or not cal

    @settings(max_examples=300)
    @given(estimates, st.floats(0.01, 0.99))
    def test_probability_rule_consistency(self, est, alpha):
        p = failure_probability_analytic(est.cpk_hat, est.se, C0)
        if abs(p - alpha) < 1e-9:
            return
        assert decide(FailureProbability(alpha), est, C0).accept == (p <= alpha)

    def test_margin_quarter_sample_scaling(self):
        cpk = 1.5
        for n in (8, 32, 100):
            m1 = k_from_alpha(0.05) * se_plugin(cpk, n)
            m2 = k_from_alpha(0.05) * se_plugin(cpk, 4 * n)
            assert m1 / m2 == 2.0


class TestLcb:
    def test_median_gamma_is_identity(self):
        est = CapabilityEstimate(1.5, 0.1, 32)
        assert lcb(est, 0.5) == 1.5

    def test_frozen_value(self):
        est = CapabilityEstimate(1.5, 0.1, 32)
        assert lcb(est, 0.05) == pytest.approx(1.3355, abs=1e-4)

    def test_domain(self):
        with pytest.raises(DomainError):
            lcb(CapabilityEstimate(1.5, 0.1, 32), 1.0)


class TestAsymptotics:
    @pytest.mark.parametrize(
        "k,target", [(0.0, 0.5), (1.645, 0.05), (2.326, 0.01)]
    )
    def test_boundary_acceptance(self, k, target):
        assert boundary_acceptance(k) == pytest.approx(target, abs=1e-3)

    def test_local_acceptance_at_boundary(self):
        assert local_acceptance(C0, C0, 50, 0.0) == 0.5
        assert local_acceptance(C0, C0, 50, 1.645) == pytest.approx(0.05, abs=1e-3)

    def test_local_acceptance_one_se_above(self):
        from capgate.capability import sigma_c

        n = 10_000
        cpk = C0 + sigma_c(C0) / math.sqrt(n)
        assert local_acceptance(cpk, C0, n, 0.0) == pytest.approx(0.8413, abs=5e-3)

    def test_local_acceptance_domain(self):
        with pytest.raises(DomainError):
            local_acceptance(1.5, C0, 0, 0.0)


class TestExpectedLoss:
    def test_below_state_charges_false_accept(self):
        loss = LossSpec(c_fa=10.0, c_fr=1.0)
        assert expected_loss_point(0.4, 0.9, loss, state_below=True) == pytest.approx(4.0)

    def test_above_state_charges_false_reject(self):
        loss = LossSpec(c_fa=10.0, c_fr=1.0)
        assert expected_loss_point(0.4, 0.1, loss, state_below=False) == pytest.approx(0.1)

    def test_zero_error_probability(self):
        loss = LossSpec(c_fa=5.0, c_fr=1.0)
        assert expected_loss_point(0.0, 0.0, loss, state_below=True) == 0.0

    def test_loss_spec_requires_positive_costs(self):
        with pytest.raises(DomainError):
            LossSpec(c_fa=0.0, c_fr=1.0)
        assert LossSpec(10.0, 2.0).lam == 5.0

    def test_probability_domain(self):
        with pytest.raises(DomainError):
            expected_loss_point(1.5, 0.0, LossSpec(1.0, 1.0), True)
