import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burstlab.fbm import (FbmParams, circulant_eigenvalues, fbm_passage_exponent_theory,
                          fgn_autocovariance, fgn_sample, simulate_fbm, simulate_fgn)
from burstlab.spectral import fit_power_law, welch_psd


def _acov(v, k):
    v = v - v.mean()
    return np.dot(v[:-k or None], v[k:]) / v.size


def test_autocovariance_examples():
    for h in (0.1, 0.5, 0.9):
        assert fgn_autocovariance(h, 1.0, 0) == pytest.approx(1.0)
    assert np.allclose(fgn_autocovariance(0.5, 1.0, np.arange(1, 20)), 0.0, atol=1e-15)
    assert fgn_autocovariance(0.75, 1.0, 1) == pytest.approx((2 ** 1.5 - 2) / 2)
    assert fgn_autocovariance(0.75, 1.0, 1) == pytest.approx(0.4142136, abs=1e-7)


@given(st.floats(0.01, 0.99), st.integers(1, 1000))
def test_autocovariance_symmetric_and_scaled(h, k):
    assert fgn_autocovariance(h, 2.0, k) == pytest.approx(4 * fgn_autocovariance(h, 1.0, -k))


@given(st.floats(0.02, 0.98), st.integers(2, 2000))
def test_circulant_embedding_nonnegative(h, n):
    eig = circulant_eigenvalues(n, h)
    assert eig.min() >= -1e-10 * eig.max()


def test_white_noise_at_half():
    v = simulate_fgn(FbmParams(0.5, 1_000_000), seed=1).values
    assert abs(_acov(v, 1) / _acov(v, 0)) < 3e-3


def test_autocovariance_matches_theory():
    n = 1_000_000
    v = simulate_fgn(FbmParams(0.75, n), seed=2).values
    gamma = fgn_autocovariance(0.75, 1.0, np.arange(0, 40))
    for k in range(1, 11):
        # stderr of a long-memory sample autocovariance: sum of gamma^2 over lags
        lags = np.arange(-n // 100, n // 100)
        g = fgn_autocovariance(0.75, 1.0, lags)
        gk = fgn_autocovariance(0.75, 1.0, lags + k) * fgn_autocovariance(0.75, 1.0, lags - k)
        se = np.sqrt(np.sum(g * g + gk) / n)
        assert abs(_acov(v, k) - gamma[k]) < 3 * se


def test_aggregated_variance_slope():
    v = simulate_fgn(FbmParams(0.7, 1 << 20), seed=3).values
    ms = 2 ** np.arange(1, 11)
    var = [np.var(v[: v.size // m * m].reshape(-1, m).sum(axis=1)) for m in ms]
    slope = np.polyfit(np.log(ms), np.log(var), 1)[0]
    assert slope == pytest.approx(1.4, abs=0.05)


def test_stationarity_halves():
    v = simulate_fgn(FbmParams(0.7, 1 << 20), seed=4).values
    a, b = v[: v.size // 2], v[v.size // 2:]
    for k in (1, 5, 20):
        assert abs(_acov(a, k) - _acov(b, k)) < 0.05


def test_levinson_matches_circulant_law():
    rng = np.random.default_rng(5)
    paths = np.array([fgn_sample(64, 0.7, rng, "levinson")[0] for _ in range(3000)])
    cov = np.cov(paths[:, :6].T)
    expected = fgn_autocovariance(0.7, 1.0, np.arange(6))
    assert np.allclose(cov[0], expected, atol=0.08)


def test_memory_budget_reported():
    with pytest.raises(MemoryError):
        fgn_sample(1 << 30, 0.7, np.random.default_rng(0), memory_budget=1 << 20)


def test_fbm_first_value_and_seed():
    p = FbmParams(0.6, 4096, dt=0.5, sigma=2.0)
    inc = simulate_fgn(p, 9)
    path = simulate_fbm(p, 9)
    assert path.values[0] == inc.values[0]
    assert np.allclose(np.diff(path.values), inc.values[1:])
    assert np.array_equal(simulate_fbm(p, 9).values, path.values)


@pytest.mark.parametrize("h,tol", [(0.5, 0.1), (0.7, 0.15)])
def test_fbm_psd_slope(h, tol):
    x = simulate_fbm(FbmParams(h, 1 << 20), seed=6)
    fit = fit_power_law(welch_psd(x, 1 << 14, bins_per_decade=10), 1e-3, 1e-1)
    assert fit.exponent == pytest.approx(2 * h + 1, abs=tol)


def test_passage_exponent_theory():
    assert fbm_passage_exponent_theory(0.5) == 1.5
    assert fbm_passage_exponent_theory(0.35) == pytest.approx(1.65)
    assert fbm_passage_exponent_theory(0.2) == pytest.approx(1.8)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.0, 2.0))
def test_params_hurst_range(h):
    if 0 < h < 1:
        FbmParams(h, 10)
    else:
        with pytest.raises(ValueError):
            FbmParams(h, 10)
