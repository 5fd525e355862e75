import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from burstlab.passage import log_histogram
from burstlab.sde import (ReturnModelParams, SdeParams, generate_model_returns,
                          psd_exponent_theory, simulate_sde, stationary_pdf_theory,
                          transition_scaling_samples)
from burstlab.series import moving_average, rolling_std
from burstlab.spectral import fit_power_law


def test_params_validation():
    with pytest.raises(ValueError):
        SdeParams(eta=1.0)
    with pytest.raises(ValueError):
        SdeParams(x_min=10.0, x_max=5.0)
    with pytest.raises(ValueError):
        SdeParams(x0=0.5)
    assert SdeParams().x0 == 1.0


def test_zero_noise_drifts_upward_from_x_min():
    p = SdeParams(eta=2.5, lam=3.0, x_min=1.0, x_max=1e3, kappa=0.1, x0=1.0)
    x = simulate_sde(p, 1e-2, 1e-4, seed=0, noise=False).values
    assert x[0] == 1.0
    assert np.all(np.diff(x) > 0)


def test_same_seed_same_path():
    p = SdeParams()
    a = simulate_sde(p, 1e-2, 1e-5, seed=42)
    b = simulate_sde(p, 1e-2, 1e-5, seed=42)
    c = simulate_sde(p, 1e-2, 1e-5, seed=43)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_duration_too_short():
    with pytest.raises(ValueError):
        simulate_sde(SdeParams(), 1e-4, 1e-5, seed=0)


@settings(max_examples=15, deadline=None)
@given(st.floats(1.5, 3.0), st.floats(2.0, 5.0), st.floats(0.05, 0.3), st.integers(0, 2 ** 32))
def test_paths_stay_inside_walls(eta, lam, kappa, seed):
    p = SdeParams(eta, lam, 1.0, 100.0, kappa)
    x = simulate_sde(p, 0.05, 1e-4, seed).values
    assert x.min() >= 1.0 and x.max() <= 100.0


def test_stationary_pdf_examples():
    p = SdeParams(eta=2.5, lam=2.0, x_min=1.0, x_max=100.0)
    assert stationary_pdf_theory(p, 1.0) == pytest.approx(100 / 99, rel=1e-14)
    p1 = SdeParams(eta=2.5, lam=1.0, x_min=1.0, x_max=100.0)
    assert stationary_pdf_theory(p1, 2.0) == pytest.approx(1 / (2 * math.log(100)))
    for lam in (1.0, 2.0, 3.0, 4.5):
        q = SdeParams(eta=2.5, lam=lam, x_min=1.0, x_max=1e3)
        total, _ = integrate.quad(lambda x: stationary_pdf_theory(q, x), 1.0, 1e3,
                                  points=[2, 10, 100], limit=200, epsabs=1e-13)
        assert total == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        stationary_pdf_theory(p, 0.5)


def test_psd_exponent_theory():
    assert psd_exponent_theory(SdeParams(eta=2.5, lam=3.0)) == pytest.approx((1.0, 0.0))
    assert psd_exponent_theory(SdeParams(eta=2.5, lam=4.0)) == pytest.approx((4 / 3, 1 / 6))


def test_histogram_slope_step_size_convergence():
    """Halving kappa leaves the stationary slope unchanged within error."""
    slopes = []
    for kappa in (0.1, 0.05):
        x = simulate_sde(SdeParams(kappa=kappa), 20.0, 1e-5, seed=5)
        fit = fit_power_law(log_histogram(x.values, 10), 10.0, 100.0)
        slopes.append((fit.exponent, fit.stderr))
    (a, sa), (b, sb) = slopes
    # regression stderr ignores autocorrelation, so allow a floor of 0.05
    assert abs(a - b) < max(3 * math.hypot(sa, sb), 0.05)


def test_transition_identity_scale():
    pair = transition_scaling_samples(SdeParams(kappa=0.05, x_max=1e4), 10.0, 1.0,
                                      5e-6, 20_000, seed=3)
    _, p = pair.ks_test()
    assert p > 0.01
    assert not pair.contaminated


def test_transition_contamination_flag():
    pair = transition_scaling_samples(SdeParams(kappa=0.05, x_max=1e4), 1.05, 2.0,
                                      2e-3, 2000, seed=3)
    assert pair.boundary_fraction > 0.01 and pair.contaminated


def test_model_returns_pure_noise():
    r = generate_model_returns(SdeParams(), ReturnModelParams(a0=0.0, b0=2.0, delta=1e-5),
                               2.0, seed=1, normalize=False)
    v = r.values
    assert v.std() == pytest.approx(2.0, rel=0.01)
    assert abs(np.corrcoef(v[1:], v[:-1])[0, 1]) < 3e-3 * 3
    assert stats.normaltest(v).pvalue > 1e-3


@pytest.mark.parametrize("seed", [2, 3])
def test_model_returns_track_x(seed):
    # x is compared over the same 10-sample window the volatility estimate uses;
    # at large x the state moves a lot within ten samples
    r, path = generate_model_returns(SdeParams(), ReturnModelParams(a0=10.0, delta=1e-6),
                                     1.0, seed=seed, return_path=True)
    assert len(r) == 1_000_000
    vol = rolling_std(r, 10).values
    x = moving_average(path, 10).values
    assert np.corrcoef(vol, x)[0, 1] > 0.9
