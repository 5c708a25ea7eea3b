import numpy as np
import pytest

from capgate.capability import normal_quantile
from capgate.errors import DomainError, InsufficientData
from capgate.normality import anderson_darling, classify_normality, critical_value


def near_perfect_normal(n=32):
    return np.array([normal_quantile((i + 0.5) / n) for i in range(n)])


class TestStatistic:
    def test_near_perfect_sample_scores_low(self):
        a = anderson_darling(near_perfect_normal())
        assert a < 0.2

    def test_location_scale_invariant(self):
        x = near_perfect_normal()
        assert anderson_darling(5.0 + 2.5 * x) == pytest.approx(
            anderson_darling(x), rel=1e-9
        )

    def test_minimum_sample_size(self):
        with pytest.raises(InsufficientData):
            anderson_darling([1.0, 2.0, 3.0, 4.0, 5.0])

    def test_constant_sample_is_maximally_non_normal(self):
        assert anderson_darling([2.0] * 12) == np.inf


class TestCriticalValues:
    @pytest.mark.parametrize(
        "level,cv",
        [(0.15, 0.576), (0.10, 0.656), (0.05, 0.787), (0.025, 0.918), (0.01, 1.092)],
    )
    def test_table_nodes(self, level, cv):
        assert critical_value(level) == cv

    def test_interpolation_monotone(self):
        cvs = [critical_value(lv) for lv in (0.15, 0.12, 0.08, 0.05, 0.03, 0.012)]
        assert all(a < b for a, b in zip(cvs, cvs[1:]))

    @pytest.mark.parametrize("level", [0.005, 0.2, 0.5])
    def test_out_of_table_levels_rejected(self, level):
        with pytest.raises(DomainError):
            critical_value(level)


class TestClassify:
    def test_near_perfect_is_normal(self):
        assert classify_normality(near_perfect_normal())

    def test_lognormal_power(self):
        # strongly skewed exp(normal) samples at n=32: the screen should
        # flag essentially all of them across seeds
        flagged = 0
        for seed in range(20):
            x = np.exp(np.random.default_rng(seed).normal(0.0, 1.0, 32))
            flagged += not classify_normality(x)
        assert flagged >= 19

    def test_normal_samples_mostly_pass(self):
        passed = 0
        for seed in range(40):
            x = np.random.default_rng(900 + seed).normal(5.0, 2.0, 32)
            passed += classify_normality(x)
        assert passed >= 34  # 5% level: expect ~2 rejections in 40

    def test_small_sample_rejected(self):
        with pytest.raises(InsufficientData):
            classify_normality([1.0, 2.0, 1.5, 1.2, 1.8])

    def test_level_tightens_monotonically(self):
        # a borderline sample rejected at 15% can pass at 1%
        rng = np.random.default_rng(12)
        x = rng.normal(0, 1, 32) + 0.4 * rng.normal(0, 1, 32) ** 2
        a = anderson_darling(x)
        assert (a <= critical_value(0.15)) <= (a <= critical_value(0.01))
