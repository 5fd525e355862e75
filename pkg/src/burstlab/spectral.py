"""Power spectra and power-law fitting.

Sign convention: every reported exponent is positive for a decaying law, so
``S(f) ~ f**-beta`` gives ``beta > 0`` and ``p(T) ~ T**-alpha`` gives
``alpha > 0`` (3/2 for a one-dimensional Markov process).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, signal

from .passage import LogHistogram
from .series import UniformSeries


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    frequencies: np.ndarray
    power: np.ndarray
    segments_used: int
    log_binned: bool = False

    def __post_init__(self):
        if self.frequencies.shape != self.power.shape:
            raise ValueError("frequencies and power lengths differ")


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    intercept: float
    range: tuple
    stderr: float
    r2: float | None
    n: int
    method: str = "lsq"

    def to_dict(self):
        d = asdict(self)
        d["range"] = list(self.range)
        return d


def welch_psd(series: UniformSeries, segment_len, overlap_fraction=0.5,
              bins_per_decade=None) -> SpectrumEstimate:
    """One-sided Hann-window Welch estimate, density-scaled so that
    ``sum(power) * df`` equals the series variance.  The zero frequency is
    dropped.  With ``bins_per_decade`` the result is log-binned."""
    n = len(series)
    if segment_len < 16:
        raise ValueError("segment_len must be >= 16")
    if n < segment_len:
        raise ValueError(f"series of length {n} shorter than segment {segment_len}")
    if not 0 <= overlap_fraction < 1:
        raise ValueError("overlap_fraction must lie in [0, 1)")
    noverlap = int(round(segment_len * overlap_fraction))
    f, p = signal.welch(series.values, fs=1.0 / series.dt, window="hann",
                        nperseg=segment_len, noverlap=noverlap,
                        detrend="constant", scaling="density", return_onesided=True)
    step = segment_len - noverlap
    segments = 1 + (n - segment_len) // step
    spec = SpectrumEstimate(f[1:], p[1:], segments)
    return log_bin_spectrum(spec, bins_per_decade) if bins_per_decade else spec


def average_spectra(spectra):
    spectra = list(spectra)
    f = spectra[0].frequencies
    for s in spectra[1:]:
        if s.frequencies.shape != f.shape or not np.allclose(s.frequencies, f):
            raise ValueError("spectra on different frequency grids")
    w = np.array([s.segments_used for s in spectra], dtype=float)
    p = np.average([s.power for s in spectra], axis=0, weights=w)
    return SpectrumEstimate(f, p, int(w.sum()), spectra[0].log_binned)


def log_bin_spectrum(spec: SpectrumEstimate, bins_per_decade=10) -> SpectrumEstimate:
    """Average power inside logarithmic frequency bins; each non-empty bin is
    represented by the geometric mean of its frequencies."""
    f, p = spec.frequencies, spec.power
    lo, hi = math.log10(f[0]), math.log10(f[-1])
    nb = max(1, math.ceil((hi - lo) * bins_per_decade))
    edges = np.linspace(lo, hi + 1e-12, nb + 1)
    idx = np.clip(np.digitize(np.log10(f), edges) - 1, 0, nb - 1)
    counts = np.bincount(idx, minlength=nb)
    psum = np.bincount(idx, weights=p, minlength=nb)
    lsum = np.bincount(idx, weights=np.log(f), minlength=nb)
    ok = counts > 0
    return SpectrumEstimate(np.exp(lsum[ok] / counts[ok]), psum[ok] / counts[ok],
                            spec.segments_used, True)


def _xy(obj):
    if isinstance(obj, SpectrumEstimate):
        return obj.frequencies, obj.power
    if isinstance(obj, LogHistogram):
        return obj.centers, obj.density
    x, y = obj
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


def fit_power_law(data, lo=None, hi=None, skip_first=False) -> PowerLawFit:
    """Least squares of log(y) on log(x) over ``lo <= x <= hi``.

    ``data`` is a SpectrumEstimate, a LogHistogram or an ``(x, y)`` pair.
    ``skip_first`` drops the first positive point in range (used for
    duration histograms, whose first log-bin is distorted by discreteness).
    """
    x, y = _xy(data)
    lo = x.min() if lo is None else lo
    hi = x.max() if hi is None else hi
    if not lo < hi:
        raise ValueError("fit range needs lo < hi")
    m = (x >= lo) & (x <= hi) & (y > 0)
    idx = np.flatnonzero(m)
    if skip_first and idx.size:
        idx = idx[1:]
    if idx.size < 5:
        raise ValueError(f"need >= 5 positive points in [{lo}, {hi}], got {idx.size}")
    lx, ly = np.log(x[idx]), np.log(y[idx])
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = coef
    resid = ly - A @ coef
    dof = idx.size - 2
    sxx = np.sum((lx - lx.mean()) ** 2)
    stderr = math.sqrt(np.sum(resid ** 2) / dof / sxx) if dof > 0 else float("nan")
    sst = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / sst if sst > 0 else 1.0
    return PowerLawFit(float(-slope), float(intercept), (float(lo), float(hi)),
                       float(stderr), float(r2), int(idx.size), "lsq")


def _ssr(lx, ly):
    if lx.size < 2:
        return 0.0
    coef = np.polyfit(lx, ly, 1)
    return float(np.sum((ly - np.polyval(coef, lx)) ** 2))


@dataclass(frozen=True)
class TwoRegimeFit:
    low: PowerLawFit
    high: PowerLawFit
    f_break: float
    reliable: bool
    residual: float
    single: PowerLawFit
    single_residual: float

    @property
    def beta1(self):
        return self.low.exponent

    @property
    def beta2(self):
        return self.high.exponent

    def to_dict(self):
        return {"beta1": self.beta1, "beta2": self.beta2, "f_break": self.f_break,
                "reliable": self.reliable, "residual": self.residual,
                "low": self.low.to_dict(), "high": self.high.to_dict(),
                "single": self.single.to_dict(),
                "single_residual": self.single_residual}


def fit_two_regime_psd(spectrum, break_grid=None, lo=None, hi=None,
                       min_points=5) -> TwoRegimeFit:
    """Piecewise log-log fit with the break chosen on ``break_grid`` by minimal
    total squared residual.  ``low`` is the beta_1 (low-frequency) regime."""
    f, p = _xy(spectrum)
    lo = f.min() if lo is None else lo
    hi = f.max() if hi is None else hi
    m = (f >= lo) & (f <= hi) & (p > 0)
    f, p = f[m], p[m]
    lx, ly = np.log(f), np.log(p)
    if break_grid is None:
        break_grid = np.logspace(math.log10(f[0]), math.log10(f[-1]), 81)[1:-1]
    break_grid = np.asarray(break_grid, dtype=float)
    best = None
    for fb in break_grid:
        left = f < fb
        nl = int(left.sum())
        if nl < min_points or f.size - nl < min_points:
            continue
        total = _ssr(lx[left], ly[left]) + _ssr(lx[~left], ly[~left])
        if best is None or total < best[0] - 1e-15:
            best = (total, fb)
    if best is None:
        raise ValueError("break grid leaves fewer than min_points on one side")
    total, fb = best
    low = fit_power_law((f[f < fb], p[f < fb]))
    high = fit_power_law((f[f >= fb], p[f >= fb]))
    single = fit_power_law((f, p))
    joint = math.hypot(low.stderr, high.stderr)
    reliable = bool(abs(low.exponent - high.exponent) > 3.0 * joint)
    return TwoRegimeFit(low, high, float(fb), reliable, float(total), single,
                        _ssr(lx, ly))


def hurst_from_beta(beta):
    """H = (beta - 1) / 2 (may fall outside (0, 1) for non-fBm signals)."""
    return (beta - 1.0) / 2.0


# ------------------------------------------------------------ duration MLE


def _trunc_logmoments(alpha, a, b):
    """Mean and variance of u = ln x when x has density ~ x^-alpha on [e^a, e^b]
    (u is a truncated exponential with rate alpha - 1)."""
    r = alpha - 1.0
    L = b - a
    if abs(r * L) < 1e-6:
        return a + L / 2 - r * L * L / 12, L * L / 12
    # work with the upper tail when r < 0
    if r > 0:
        e = math.exp(-r * L)
        mean = a + 1.0 / r - L * e / (1.0 - e)
        var = 1.0 / r ** 2 - L * L * e / (1.0 - e) ** 2
    else:
        e = math.exp(r * L)
        mean = b + 1.0 / r + L * e / (1.0 - e)
        var = 1.0 / r ** 2 - L * L * e / (1.0 - e) ** 2
    return mean, var


def _lattice_logmoments(alpha, lk):
    w = -alpha * lk
    w = np.exp(w - w.max())
    w /= w.sum()
    mean = float(w @ lk)
    return mean, float(w @ (lk - mean) ** 2)


def fit_duration_exponent_mle(durations, lo, hi, lattice=None) -> PowerLawFit:
    """Maximum-likelihood exponent of a power law truncated to ``[lo, hi]``.

    Continuous by default.  With ``lattice=dt`` the durations are treated as
    integer multiples of ``dt`` and the discrete truncated law
    ``p(k) ~ k**-alpha`` over the lattice points in range is fitted.
    The standard error is from the Fisher information ``n Var[ln x]``.
    """
    if not hi > lo * (1 + 1e-9) or not lo > 0:
        raise ValueError("need 0 < lo < hi")
    d = np.asarray(durations, dtype=float)
    if lattice:
        k = np.round(d / lattice)
        k_lo = math.ceil(lo / lattice - 1e-9)
        k_hi = math.floor(hi / lattice + 1e-9)
        if k_hi - k_lo < 2:
            raise ValueError("range holds fewer than three lattice points")
        k = k[(k >= k_lo) & (k <= k_hi)]
        x = k
        grid = np.log(np.arange(k_lo, k_hi + 1, dtype=float))
        moments = lambda a: _lattice_logmoments(a, grid)  # noqa: E731
    else:
        x = d[(d >= lo) & (d <= hi)]
        la, lb = math.log(lo), math.log(hi)
        moments = lambda a: _trunc_logmoments(a, la, lb)  # noqa: E731
    n = x.size
    if n < 100:
        raise ValueError(f"need >= 100 durations in [{lo}, {hi}], got {n}")
    target = float(np.mean(np.log(x)))
    alpha = optimize.brentq(lambda a: moments(a)[0] - target, -20.0, 20.0,
                            xtol=1e-12)
    _, var = moments(alpha)
    stderr = 1.0 / math.sqrt(n * var)
    if lattice:
        logz = math.log(np.exp(-alpha * grid).sum())
    elif abs(alpha - 1.0) < 1e-12:
        logz = math.log(math.log(hi / lo))
    else:
        logz = math.log((hi ** (1 - alpha) - lo ** (1 - alpha)) / (1 - alpha))
    return PowerLawFit(float(alpha), float(-logz), (float(lo), float(hi)),
                       float(stderr), None, int(n),
                       "mle-lattice" if lattice else "mle")
