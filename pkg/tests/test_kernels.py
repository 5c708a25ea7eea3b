import numpy as np
import pytest

from capgate import _kernels
from capgate._kernels import _fallback

try:
    from capgate._kernels import _native
except ImportError:
    _native = None

needs_native = pytest.mark.skipif(_native is None, reason="extension not built")


def test_backend_reported():
    assert _kernels.BACKEND in ("native", "python")
    if _native is None:
        assert _kernels.BACKEND == "python"


def test_fallback_row_stats_match_numpy():
    rng = np.random.default_rng(0)
    x = rng.normal(2.0, 3.0, size=(50, 17))
    mean, sd = _fallback.row_stats(x)
    assert np.allclose(mean, x.mean(axis=1), rtol=0, atol=0)
    assert np.allclose(sd, x.std(axis=1, ddof=1), rtol=0, atol=0)


def test_fallback_capability_formula():
    x = np.array([[0.0, 2.0, 0.0, 2.0]])
    mean, sd, cpk = _fallback.row_capability(x, -4.0, 4.0)
    assert mean[0] == 1.0
    assert cpk[0] == pytest.approx(np.sqrt(3.0) / 2.0, abs=1e-12)


def test_fallback_degenerate_row_is_nan():
    x = np.vstack([np.full(6, 3.0), np.arange(6.0)])
    _, sd, cpk = _fallback.row_capability(x, -4.0, 4.0)
    assert sd[0] == 0.0 and np.isnan(cpk[0])
    assert np.isfinite(cpk[1])


@needs_native
def test_native_matches_fallback():
    rng = np.random.default_rng(7)
    for shape in ((1, 2), (100, 5), (2000, 64)):
        x = rng.normal(0.5, 1.5, size=shape)
        mf, sf, cf = _fallback.row_capability(x, -4.0, 4.0)
        mn, sn, cn = _native.row_capability(x, -4.0, 4.0)
        assert np.allclose(mf, mn, rtol=1e-12, atol=1e-15)
        assert np.allclose(sf, sn, rtol=1e-12, atol=1e-15)
        assert np.allclose(cf, cn, rtol=1e-11, atol=1e-14)


@needs_native
def test_native_degenerate_row_is_nan():
    x = np.vstack([np.full(6, 3.0), np.arange(6.0)])
    _, sd, cpk = _native.row_capability(x, -4.0, 4.0)
    assert sd[0] == 0.0 and np.isnan(cpk[0])
    assert np.isfinite(cpk[1])


@needs_native
def test_native_rejects_single_column():
    with pytest.raises(ValueError):
        _native.row_stats(np.zeros((3, 1)))


def test_noncontiguous_input_accepted():
    rng = np.random.default_rng(3)
    big = rng.normal(size=(40, 20))
    view = big[::2, ::2]  # non-contiguous
    mean, sd, cpk = _kernels.row_capability(view, -4.0, 4.0)
    ref_mean, ref_sd, ref_cpk = _fallback.row_capability(np.ascontiguousarray(view), -4.0, 4.0)
    assert np.allclose(mean, ref_mean, rtol=1e-12, atol=0)
    assert np.allclose(cpk, ref_cpk, rtol=1e-11, atol=0)
