import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from burstlab.fbm import FbmParams, simulate_fbm
from burstlab.passage import (bessel_first_zero, bessel_index, burst_pdf_branches,
                              burst_pdf_theory, burst_theory_params, duration_histogram,
                              exponential_tail_rate, extract_bursts, log_histogram,
                              pool_durations)
from burstlab.sde import SdeParams, simulate_sde
from burstlab.series import UniformSeries, normalize_unit_std
from burstlab.spectral import fit_duration_exponent_mle, fit_power_law
from conftest import mp_first_zero


def test_hand_example():
    s = UniformSeries([0.0, 2, 2, 0, 0, 2, 0], 1.0)
    b = extract_bursts(s, 1.0)
    assert sorted(b.bursts) == [1.0, 2.0]
    assert list(b.interbursts) == [2.0]
    assert b.edge_censored == 2
    assert list(b.burst_starts) == [1.0, 5.0]


def test_no_crossing():
    b = extract_bursts(UniformSeries([3.0, 4, 5], 1.0), 1.0)
    assert b.bursts.size == 0 and b.interbursts.size == 0
    assert b.edge_censored == 1 and b.censored_time == 3.0


@given(arrays(np.float64, st.integers(1, 300), elements=st.floats(-5, 5)),
       st.floats(-3, 3), st.floats(0.01, 10))
def test_tiling(v, h, dt):
    b = extract_bursts(UniformSeries(v, dt), h)
    total = b.bursts.sum() + b.interbursts.sum() + b.censored_time
    assert total == pytest.approx(len(v) * dt, rel=1e-12)


@given(arrays(np.int64, st.integers(2, 300), elements=st.integers(-40, 40)),
       st.integers(-24, 24), st.integers(-16, 16))
def test_threshold_duality(k, j, m):
    # dyadic grid keeps c - v and c - h exact; h sits between grid points
    v, h, c = k / 8.0, j / 8.0 + 1 / 16.0, m / 8.0
    a = extract_bursts(UniformSeries(v, 1.0), h)
    b = extract_bursts(UniformSeries(c - v, 1.0), c - h)
    assert np.array_equal(a.bursts, b.interbursts)
    assert np.array_equal(a.interbursts, b.bursts)


def test_interpolated_mode():
    s = UniformSeries([0.0, 2.0, 2.0, 0.0, 2.0, 0.0], 1.0)
    b = extract_bursts(s, 1.0, mode="interpolated")
    # crossings at 0.5, 2.5, 3.5, 4.5
    assert list(b.bursts) == pytest.approx([2.0, 1.0])
    assert list(b.interbursts) == pytest.approx([1.0])


def test_wiener_burst_slope():
    sets = [extract_bursts(simulate_fbm(FbmParams(0.5, 1 << 20), seed), 0.0)
            for seed in range(16)]
    d, _ = pool_durations(sets, "burst")
    fit = fit_power_law(log_histogram(d, 8), 10.0, 1e4, skip_first=True)
    assert fit.exponent == pytest.approx(1.5, abs=0.1)


def test_histogram_single_value():
    h = duration_histogram([3.0])
    assert np.count_nonzero(h.counts) == 1
    assert np.sum(h.density * h.widths) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        log_histogram([])


def _pareto(alpha, n, rng, lo=1.0):
    return lo * (1 - rng.random(n)) ** (-1 / (alpha - 1))


def test_pareto_histogram_slope(rng):
    x = _pareto(1.5, 1_000_000, rng)
    f8 = fit_power_law(log_histogram(x, 8), 2.0, 1e4)
    assert f8.exponent == pytest.approx(1.5, abs=0.03)
    f16 = fit_power_law(log_histogram(x, 16), 2.0, 1e4)
    assert abs(f16.exponent - f8.exponent) < 2 * math.hypot(f8.stderr, f16.stderr) + 0.01


def test_bessel_index():
    assert bessel_index(2.5, 4.0) == 0.0
    assert bessel_index(2.5, 3.0) == pytest.approx(-1 / 3)
    assert bessel_index(2.0, 3.0) == 0.0
    with pytest.raises(ValueError):
        bessel_index(1.0, 3.0)


def test_bessel_zero_known_values():
    assert bessel_first_zero(0.0) == pytest.approx(2.4048255577, abs=1e-10)
    assert bessel_first_zero(1.0) == pytest.approx(3.8317059702, abs=1e-10)
    zs = [bessel_first_zero(nu) for nu in (0, 0.5, 1, 2)]
    assert all(np.diff(zs) > 0)
    assert bessel_first_zero(0.5) == pytest.approx(math.pi, abs=1e-12)
    assert bessel_first_zero(-0.5) == pytest.approx(math.pi / 2, abs=1e-12)
    with pytest.raises(ValueError):
        bessel_first_zero(-0.6)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.5, 40.0))
def test_bessel_zero_against_mpmath(nu):
    assert bessel_first_zero(nu) == pytest.approx(mp_first_zero(nu), abs=1e-8)


def test_theory_params():
    p = burst_theory_params(2.5, 4.0, 1.0)
    assert p.nu == 0.0
    j = mp_first_zero(0.0)
    assert p.t_crossover == pytest.approx(2 / (2.25 * j * j), rel=1e-12)
    # 2 / (2.25 * 5.78319) evaluates to 0.153702
    assert p.t_crossover == pytest.approx(2 / (2.25 * 5.78319), rel=1e-6)
    assert p.decay_rate == pytest.approx(1 / p.t_crossover)
    with pytest.raises(ValueError):
        burst_theory_params(1.0, 4.0, 1.0)


def test_theory_branches():
    p = burst_theory_params(2.5, 4.0, 2.0)
    T = np.array([1e-4, 1e-3, 3e-3])
    assert np.all(T < p.t_crossover)
    assert np.allclose(burst_pdf_theory(p, 4 * T) / burst_pdf_theory(p, T), 1 / 8, rtol=1e-14)
    T2 = p.t_crossover * np.array([1.5, 2.0, 3.0, 5.0])
    logd = np.log(burst_pdf_theory(p, T2) * T2)
    assert np.allclose(np.diff(logd) / np.diff(T2), -p.decay_rate, rtol=1e-10)
    power, expo = burst_pdf_branches(p, T2)
    assert np.array_equal(expo, burst_pdf_theory(p, T2))
    with pytest.raises(ValueError):
        burst_pdf_theory(p, 0.0)


def test_pooling():
    a = extract_bursts(UniformSeries([0.0, 2, 2, 0, 0, 2, 0, 3, 3, 3, 0], 1.0), 1.0)
    d, prov = pool_durations([a, a], "burst", labels=["x", "y"])
    assert d.size == 2 * a.bursts.size and d.sum() == 2 * a.bursts.sum()
    assert list(prov).count("y") == a.bursts.size
    with pytest.raises(ValueError):
        pool_durations([a], "both")


def test_pooled_variance_shrinks():
    """Pooling five runs cuts the spread of the exponent estimate ~5x."""
    # integration cost grows with x_max; 100 keeps this test quick
    p = SdeParams(x_max=100.0)

    def estimate(seeds):
        sets = []
        for s in seeds:
            x, _ = normalize_unit_std(simulate_sde(p, 20.0, 1e-4, s))
            sets.append(extract_bursts(x, 0.67))
        d, _ = pool_durations(sets, "burst")
        return fit_duration_exponent_mle(d, 1e-3, 1e-1, 1e-4).exponent

    single = [estimate([s]) for s in range(30)]
    pooled = [estimate(range(100 + 5 * k, 105 + 5 * k)) for k in range(30)]
    ratio = np.var(single, ddof=1) / np.var(pooled, ddof=1)
    # F(29, 29) puts the 99% band of a true ratio 5 at roughly [1.8, 13]
    assert 1.8 < ratio < 13


def test_exponential_tail_rate(rng):
    d = 2.0 + rng.exponential(1 / 7.0, 20_000)
    rate, se, n = exponential_tail_rate(np.concatenate([d, [0.5, 1.0]]), 2.0)
    assert n == 20_000
    assert abs(rate - 7.0) < 3 * se
    with pytest.raises(ValueError):
        exponential_tail_rate([1.0, 2.0], 0.5)
