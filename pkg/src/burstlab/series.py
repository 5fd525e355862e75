"""Uniform series, price and event containers, filters and CSV I/O.

Every filter uses left-aligned (causal) windows: output sample ``i`` summarizes
input samples ``[i, i + window)`` and keeps the input ``t0``.  The time stamp of
an output sample is therefore the *start* of its window.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SeriesError(ValueError):
    """Invalid series content or malformed series file."""


def _as_values(values, name="values"):
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if arr.size == 0:
        raise SeriesError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise SeriesError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class UniformSeries:
    """Uniformly sampled real signal; sample ``i`` sits at ``t0 + i*dt``."""

    values: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise SeriesError(f"dt must be positive and finite, got {self.dt}")
        if not math.isfinite(self.t0):
            raise SeriesError("t0 must be finite")
        object.__setattr__(self, "values", _as_values(self.values))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self):
        return self.values.size

    @property
    def times(self):
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def span(self):
        return len(self) * self.dt

    def with_values(self, values, t0=None, dt=None):
        return UniformSeries(values, self.dt if dt is None else dt,
                             self.t0 if t0 is None else t0)


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Uniformly sampled positive asset prices."""

    prices: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise SeriesError(f"dt must be positive and finite, got {self.dt}")
        prices = _as_values(self.prices, "prices")
        if np.any(prices <= 0):
            raise SeriesError("prices must be strictly positive")
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True, eq=False)
class EventStream:
    """Strictly increasing event timestamps (epoch seconds)."""

    timestamps: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        ts = np.array(self.timestamps, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(ts)):
            raise SeriesError("timestamps must be finite")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            bad = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 1
            raise SeriesError(f"timestamps must be strictly increasing (row {bad})")
        ts.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.timestamps.size

    def shifted(self, offset):
        return EventStream(self.timestamps + offset)


# ---------------------------------------------------------------- returns


def log_returns(prices: PriceSeries, delta_steps: int = 1) -> UniformSeries:
    """Overlapping log returns ``ln(S[i + delta_steps] / S[i])`` with stride 1.

    The output keeps ``prices.dt`` as its sampling interval even though each
    value spans ``delta_steps * dt``; use :func:`aggregate_returns` for the
    non-overlapping view.
    """
    if delta_steps < 1:
        raise SeriesError("delta_steps must be >= 1")
    if len(prices) <= delta_steps:
        raise SeriesError(
            f"need more than {delta_steps} prices, got {len(prices)}")
    logp = np.log(prices.prices)
    return UniformSeries(logp[delta_steps:] - logp[:-delta_steps],
                         prices.dt, prices.t0)


def aggregate_returns(r: UniformSeries, m: int) -> UniformSeries:
    """Non-overlapping sums of ``m`` consecutive returns; a trailing partial
    block is dropped."""
    if m < 1:
        raise SeriesError("m must be >= 1")
    if len(r) < m:
        raise SeriesError(f"series of length {len(r)} shorter than m={m}")
    nblocks = len(r) // m
    sums = r.values[:nblocks * m].reshape(nblocks, m).sum(axis=1)
    return UniformSeries(sums, r.dt * m, r.t0)


# ---------------------------------------------------------------- filters


def _check_window(series, window, minimum):
    if not isinstance(window, (int, np.integer)) or window < minimum:
        raise SeriesError(f"window must be an integer >= {minimum}, got {window!r}")
    if window > len(series):
        raise SeriesError(
            f"window {window} longer than series of length {len(series)}")


def moving_average(series: UniformSeries, window: int) -> UniformSeries:
    _check_window(series, window, 1)
    v = series.values
    if window == 1:
        return series.with_values(v)
    c = np.concatenate(([0.0], np.cumsum(v)))
    out = (c[window:] - c[:-window]) / window
    return series.with_values(out)


def rolling_std(series: UniformSeries, window: int) -> UniformSeries:
    """Sample standard deviation (divisor ``window - 1``) over ``[i, i+window)``."""
    _check_window(series, window, 2)
    windows = np.lib.stride_tricks.sliding_window_view(series.values, window)
    out = np.empty(windows.shape[0])
    # two-pass per window keeps constant runs exactly zero; chunked for memory
    step = max(1, 2_000_000 // window)
    for i in range(0, out.size, step):
        out[i:i + step] = windows[i:i + step].std(axis=1, ddof=1)
    return series.with_values(out)


def normalize_unit_std(series: UniformSeries):
    """Divide by the sample standard deviation without removing the mean.

    Returns ``(normalized, scale)``.
    """
    if len(series) < 2:
        raise SeriesError("need at least two samples to estimate a std")
    scale = float(np.std(series.values, ddof=1))
    if not scale > 0:
        raise SeriesError("zero-variance series cannot be normalized")
    return series.with_values(series.values / scale), scale


# ---------------------------------------------------------------- CSV I/O


def _fmt(x):
    return format(float(x), ".15g")


def _quantum(t):
    """Spacing of 15-significant-digit decimals around ``t``."""
    t = np.abs(np.asarray(t, dtype=float))
    exp = np.floor(np.log10(np.where(t > 0, t, 1.0)))
    return 10.0 ** (exp - 14)


def _uniform_grid(t, what):
    if t.size == 1:
        raise SeriesError(f"{what}: cannot infer dt from a single row")
    if np.any(np.diff(t) <= 0):
        bad = int(np.flatnonzero(np.diff(t) <= 0)[0]) + 2
        raise SeriesError(f"{what}: time column not increasing at row {bad}")
    dt = (t[-1] - t[0]) / (t.size - 1)
    expected = t[0] + np.arange(t.size) * dt
    tol = 1e-9 * dt + 4 * _quantum(np.maximum(np.abs(t), dt))
    dev = np.abs(t - expected)
    if np.any(dev > tol):
        bad = int(np.argmax(dev > tol)) + 2
        raise SeriesError(f"{what}: non-uniform time spacing near row {bad}")
    return float(t[0]), float(dt)


def splice_gaps(t, values):
    """Concatenate sessions separated by gaps: the modal spacing becomes ``dt``
    and every longer gap is closed.  Returns ``(t0, dt, values)``."""
    d = np.diff(t)
    if d.size == 0:
        raise SeriesError("cannot splice a single row")
    if np.any(d <= 0):
        raise SeriesError("time column must be increasing")
    rounded = np.round(d, 9)
    uniq, counts = np.unique(rounded, return_counts=True)
    dt = float(uniq[np.argmax(counts)])
    if np.any(d < dt * (1 - 1e-9)):
        raise SeriesError("spacing below the modal dt cannot be spliced")
    return float(t[0]), dt, values


def _read_rows(path, header):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise SeriesError(f"{path}: empty file") from None
        if [c.strip() for c in first] != header:
            raise SeriesError(f"{path}: expected header {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SeriesError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise SeriesError(f"{path}:{lineno}: malformed number") from None
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    if not np.all(np.isfinite(arr)):
        raise SeriesError(f"{path}: non-finite value")
    return arr


def read_series(path, splice=False) -> UniformSeries:
    arr = _read_rows(path, ["t", "value"])
    if arr.shape[0] == 0:
        raise SeriesError(f"{path}: no data rows")
    if splice:
        t0, dt, v = splice_gaps(arr[:, 0], arr[:, 1])
    else:
        t0, dt = _uniform_grid(arr[:, 0], str(path))
        v = arr[:, 1]
    return UniformSeries(v, dt, t0)


def read_ticks(path, splice=False) -> PriceSeries:
    arr = _read_rows(path, ["timestamp", "price"])
    if arr.shape[0] == 0:
        raise SeriesError(f"{path}: no data rows")
    if splice:
        t0, dt, p = splice_gaps(arr[:, 0], arr[:, 1])
    else:
        t0, dt = _uniform_grid(arr[:, 0], str(path))
        p = arr[:, 1]
    return PriceSeries(p, dt, t0)


def read_events(path) -> EventStream:
    arr = _read_rows(path, ["timestamp"])
    try:
        return EventStream(arr[:, 0])
    except SeriesError as exc:
        raise SeriesError(f"{path}: {exc}") from None


def write_series(path, series: UniformSeries):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("t,value\n")
        for t, v in zip(series.times, series.values):
            fh.write(f"{_fmt(t)},{_fmt(v)}\n")


def write_ticks(path, prices: PriceSeries):
    t = prices.t0 + np.arange(len(prices)) * prices.dt
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("timestamp,price\n")
        for ti, p in zip(t, prices.prices):
            fh.write(f"{_fmt(ti)},{_fmt(p)}\n")


def write_events(path, events: EventStream):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write("timestamp\n")
        for t in events.timestamps:
            fh.write(f"{_fmt(t)}\n")


def series_io(path, mode, data=None, splice=False):
    """Read (``data is None``) or write a CSV in one of the schemas
    ``series`` (t,value), ``ticks`` (timestamp,price) or ``events`` (timestamp)."""
    readers = {"series": read_series, "ticks": read_ticks, "events": read_events}
    writers = {"series": write_series, "ticks": write_ticks, "events": write_events}
    if mode not in readers:
        raise SeriesError(f"unknown mode {mode!r}")
    if data is None:
        if mode == "events":
            return read_events(path)
        return readers[mode](path, splice=splice)
    writers[mode](path, data)
    return data
