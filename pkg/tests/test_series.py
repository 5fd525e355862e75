import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from burstlab.series import (EventStream, PriceSeries, SeriesError, UniformSeries,
                             aggregate_returns, log_returns, moving_average,
                             normalize_unit_std, read_events, read_series,
                             read_ticks, rolling_std, series_io, write_events,
                             write_series, write_ticks)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_log_returns_examples():
    r = log_returns(PriceSeries([100.0, 101.0], 1.0))
    assert r.values[0] == pytest.approx(math.log(1.01))
    assert r.values[0] == pytest.approx(0.0099503, abs=1e-7)
    assert np.array_equal(log_returns(PriceSeries([5.0, 5, 5], 1.0)).values, [0.0, 0.0])
    r2 = log_returns(PriceSeries([1.0, math.e, math.e ** 2], 1.0), 2)
    assert r2.values == pytest.approx([2.0])
    assert r2.dt == 1.0


def test_log_returns_errors():
    with pytest.raises(SeriesError):
        log_returns(PriceSeries([1.0, 2.0], 1.0), 2)
    with pytest.raises(SeriesError):
        PriceSeries([1.0, -2.0], 1.0)


@given(arrays(np.float64, st.integers(2, 200), elements=st.floats(-0.1, 0.1)))
def test_log_returns_inverts_exp_cumsum(r):
    prices = 100.0 * np.exp(np.concatenate(([0.0], np.cumsum(r))))
    back = log_returns(PriceSeries(prices, 60.0)).values
    assert np.allclose(back, r, rtol=1e-12, atol=1e-12)


def test_aggregate_returns():
    r = UniformSeries([1.0, 2, 3, 4], 1.0)
    agg = aggregate_returns(r, 2)
    assert np.array_equal(agg.values, [3.0, 7.0])
    assert agg.dt == 2.0
    assert np.array_equal(aggregate_returns(r, 1).values, r.values)
    with pytest.raises(SeriesError):
        aggregate_returns(r, 0)


@given(arrays(np.float64, st.integers(4, 100), elements=st.floats(1.0, 200.0)),
       st.integers(1, 4))
def test_aggregate_telescopes(prices, m):
    p = PriceSeries(prices, 1.0)
    if len(p) <= m:
        return
    agg = aggregate_returns(log_returns(p, 1), m).values
    direct = log_returns(p, m).values[::m][:agg.size]
    assert np.allclose(agg, direct, atol=1e-12)


def test_rolling_std_examples(rng):
    assert np.array_equal(rolling_std(UniformSeries([1.0] * 4, 1.0), 2).values, [0, 0, 0])
    out = rolling_std(UniformSeries([0.0, 2, 0, 2], 1.0), 2).values
    assert out == pytest.approx([math.sqrt(2)] * 3)
    noise = UniformSeries(rng.normal(0, 2.0, 100_000), 1.0)
    assert rolling_std(noise, 10).values.mean() == pytest.approx(2.0, rel=0.05)
    with pytest.raises(SeriesError):
        rolling_std(UniformSeries([1.0, 2.0], 1.0), 3)


def test_moving_average_examples():
    assert moving_average(UniformSeries([1.0, 2, 3], 1.0), 3).values == pytest.approx([2.0])
    s = UniformSeries([3.0, 1, 4], 1.0)
    assert np.array_equal(moving_average(s, 1).values, s.values)
    step = UniformSeries([0.0] * 10 + [1.0] * 10, 1.0)
    assert moving_average(step, 10).values == pytest.approx(np.arange(11) / 10)
    with pytest.raises(SeriesError):
        moving_average(s, 0)


@given(st.integers(1, 300), st.data())
def test_filter_lengths(n, data):
    window = data.draw(st.integers(1, n))
    s = UniformSeries(np.arange(n, dtype=float), 1.0, 5.0)
    assert len(moving_average(s, window)) == n - window + 1
    if window >= 2:
        out = rolling_std(s, window)
        assert len(out) == n - window + 1
        assert out.t0 == 5.0


def test_normalize_examples():
    out, scale = normalize_unit_std(UniformSeries([0.0, 2.0], 1.0))
    assert out.values == pytest.approx([0.0, 2 / math.sqrt(2)])
    assert scale == pytest.approx(math.sqrt(2))
    with pytest.raises(SeriesError):
        normalize_unit_std(UniformSeries([3.0, 3.0], 1.0))


@given(arrays(np.float64, st.integers(2, 500), elements=finite))
def test_normalize_unit_std_property(v):
    s = UniformSeries(v, 1.0)
    if np.std(v, ddof=1) < 1e-3:
        return
    out, _ = normalize_unit_std(s)
    assert abs(np.std(out.values, ddof=1) - 1.0) < 1e-12
    again, scale = normalize_unit_std(out)
    assert scale == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(again.values, out.values, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.integers(2, 50), elements=finite),
       st.floats(1e-3, 1e3), st.floats(0, 2e9))
def test_series_csv_roundtrip(tmp_path_factory, v, dt, t0):
    path = tmp_path_factory.mktemp("io") / "s.csv"
    s = UniformSeries(v, dt, t0)
    write_series(path, s)
    back = read_series(path)
    assert np.allclose(back.values, s.values, rtol=1e-14, atol=0)
    # timestamps carry 15 significant digits, so dt is only as exact as that
    t_end = abs(t0) + len(s) * dt
    assert abs(back.dt - dt) <= 1e-9 * dt + 1e-14 * t_end
    assert back.t0 == pytest.approx(t0, rel=1e-14, abs=1e-300)
    assert np.allclose(back.times, s.times, rtol=1e-14, atol=1e-13 * t_end)


def test_ticks_and_events_roundtrip(tmp_path):
    p = PriceSeries([10.0, 10.5, 10.25], 60.0, 1.6e9)
    write_ticks(tmp_path / "t.csv", p)
    back = read_ticks(tmp_path / "t.csv")
    assert np.array_equal(back.prices, p.prices) and back.dt == pytest.approx(60.0)
    ev = EventStream([0.5, 1.25, 7.0])
    write_events(tmp_path / "e.csv", ev)
    assert np.array_equal(read_events(tmp_path / "e.csv").timestamps, ev.timestamps)
    assert np.array_equal(series_io(tmp_path / "e.csv", "events").timestamps, ev.timestamps)


def test_bad_files(tmp_path):
    (tmp_path / "dec.csv").write_text("timestamp\n1\n3\n2\n")
    with pytest.raises(SeriesError, match="increasing"):
        read_events(tmp_path / "dec.csv")
    (tmp_path / "gap.csv").write_text("t,value\n0,1\n1,2\n2,3\n5,4\n")
    with pytest.raises(SeriesError, match="non-uniform"):
        read_series(tmp_path / "gap.csv")
    (tmp_path / "bad.csv").write_text("t,value\n0,1\n1,x\n")
    with pytest.raises(SeriesError, match="malformed"):
        read_series(tmp_path / "bad.csv")
    (tmp_path / "hdr.csv").write_text("time,value\n0,1\n")
    with pytest.raises(SeriesError, match="header"):
        read_series(tmp_path / "hdr.csv")


def test_splice_gaps(tmp_path):
    (tmp_path / "gap.csv").write_text("t,value\n0,1\n1,2\n2,3\n50,4\n51,5\n")
    s = read_series(tmp_path / "gap.csv", splice=True)
    assert s.dt == 1.0 and np.array_equal(s.values, [1, 2, 3, 4, 5])
