"""Burst / inter-burst extraction, log-binned duration densities and the
burst-duration law of the nonlinear SDE (power law T^-3/2 crossing over to an
exponential cut-off set by the first Bessel zero).

Conventions: a sample is *above* the threshold when ``value > h`` and *below*
when ``value <= h``.  Runs touching either end of the series are censored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .series import UniformSeries


@dataclass(frozen=True, eq=False)
class BurstSet:
    threshold: float
    bursts: np.ndarray
    interbursts: np.ndarray
    span: float
    edge_censored: int
    censored_time: float = 0.0
    burst_starts: np.ndarray = field(default_factory=lambda: np.empty(0))
    interburst_starts: np.ndarray = field(default_factory=lambda: np.empty(0))
    mode: str = "samples"
    dt: float | None = None

    def durations(self, kind):
        if kind == "burst":
            return self.bursts
        if kind == "interburst":
            return self.interbursts
        raise ValueError(f"unknown kind {kind!r}")

    def starts(self, kind):
        return self.burst_starts if kind == "burst" else self.interburst_starts


def extract_bursts(series: UniformSeries, h: float, mode="samples") -> BurstSet:
    """Split ``series`` into maximal runs above / below ``h``.

    ``mode="samples"`` measures each run as (number of samples) * dt.
    ``mode="interpolated"`` measures crossing-to-crossing times with the
    crossings placed by linear interpolation between neighbouring samples.
    """
    if mode not in ("samples", "interpolated"):
        raise ValueError(f"unknown mode {mode!r}")
    v = series.values
    dt = series.dt
    above = v > h
    change = np.flatnonzero(above[1:] != above[:-1]) + 1
    bounds = np.concatenate(([0], change, [v.size]))
    lengths = np.diff(bounds)
    states = above[bounds[:-1]]
    n_runs = lengths.size
    censored = 1 if n_runs == 1 else 2
    inner = slice(1, n_runs - 1) if n_runs > 2 else slice(0, 0)
    in_len = lengths[inner]
    in_state = states[inner]
    in_start = bounds[:-1][inner]
    censored_time = (lengths.sum() - in_len.sum()) * dt

    if mode == "samples":
        dur = in_len * dt
        start_t = series.t0 + in_start * dt
    else:
        # crossing between samples c-1 and c at fractional position
        c = change
        frac = (h - v[c - 1]) / (v[c] - v[c - 1])
        cross = series.t0 + (c - 1 + frac) * dt
        start_t = cross[:-1]
        dur = np.diff(cross)
    return BurstSet(
        threshold=float(h),
        bursts=dur[in_state].astype(float),
        interbursts=dur[~in_state].astype(float),
        span=len(series) * dt,
        edge_censored=censored,
        censored_time=float(censored_time),
        burst_starts=start_t[in_state].astype(float),
        interburst_starts=start_t[~in_state].astype(float),
        mode=mode,
        dt=dt,
    )


def pool_durations(sets, kind, labels=None):
    """Concatenate one kind of duration across burst sets.

    Returns ``(durations, provenance)`` where ``provenance[i]`` is the label
    (default: index) of the set the i-th duration came from.
    """
    sets = list(sets)
    if kind not in ("burst", "interburst"):
        raise ValueError(f"cannot pool mixed or unknown kind {kind!r}")
    if labels is None:
        labels = list(range(len(sets)))
    parts = [s.durations(kind) for s in sets]
    prov = [np.full(p.size, lab, dtype=object) for p, lab in zip(parts, labels)]
    if not parts:
        return np.empty(0), np.empty(0, dtype=object)
    return np.concatenate(parts), np.concatenate(prov)


# ------------------------------------------------------------ histograms


@dataclass(frozen=True, eq=False)
class LogHistogram:
    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    @property
    def centers(self):
        return np.sqrt(self.edges[1:] * self.edges[:-1])

    @property
    def widths(self):
        return np.diff(self.edges)

    def to_dict(self):
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist(),
                "density": self.density.tolist()}


def log_histogram(values, bins_per_decade=8, lo=None, hi=None):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot histogram an empty sample")
    if np.any(values <= 0):
        raise ValueError("log histogram needs positive values")
    lo = values.min() if lo is None else lo
    hi = values.max() if hi is None else hi
    if hi <= lo:
        half = 10 ** (0.5 / bins_per_decade)
        edges = np.array([lo / half, lo * half])
    else:
        nbins = max(1, math.ceil(math.log10(hi / lo) * bins_per_decade - 1e-9))
        edges = np.logspace(math.log10(lo), math.log10(hi), nbins + 1)
        edges[0], edges[-1] = lo, hi
    counts, _ = np.histogram(values, edges)
    n = counts.sum()
    density = counts / (n * np.diff(edges)) if n else np.zeros(counts.size)
    return LogHistogram(edges, counts.astype(np.int64), density)


def duration_histogram(durations, bins_per_decade=8) -> LogHistogram:
    """Log-binned density from the smallest to the largest duration; empty
    bins stay in place with zero density."""
    return log_histogram(durations, bins_per_decade)


# ------------------------------------------------------------ Bessel zeros


def bessel_index(eta, lam):
    """Bessel order nu = (lam - 2 eta + 1) / (2 (eta - 1))."""
    if not eta > 1:
        raise ValueError("eta must be > 1")
    return (lam - 2.0 * eta + 1.0) / (2.0 * (eta - 1.0))


_SERIES_MAX_NU = 12.0


def _jnu_reduced(nu, x):
    """J_nu(x) / (x/2)^nu; same positive zeros as J_nu.

    Power series for moderate orders; above ``_SERIES_MAX_NU`` the
    alternating series cancels too much near the first zero and scipy's
    ``jv`` is used instead.
    """
    if nu > _SERIES_MAX_NU:
        return special.jv(nu, x) / (0.5 * x) ** nu
    u = -0.25 * x * x
    term = 1.0 / special.gamma(nu + 1.0)
    terms = [term]
    biggest = abs(term)
    k = 0
    while k < 500:
        k += 1
        term *= u / (k * (k + nu))
        terms.append(term)
        biggest = max(biggest, abs(term))
        if k > x and abs(term) < 1e-18 * biggest:
            break
    return math.fsum(terms)


def bessel_first_zero(nu) -> float:
    """First positive zero j_{nu,1} of J_nu for nu >= -1/2."""
    if not nu >= -0.5:
        raise ValueError("nu < -1/2 is not supported")
    nu = float(nu)
    upper = nu + 1.8557 * max(nu, 0.0) ** (1.0 / 3.0) + 2.0
    lo = max(nu, 0.5)
    step = 0.05
    f_lo = _jnu_reduced(nu, lo)
    x = lo
    while True:
        x_next = x + step
        f_next = _jnu_reduced(nu, x_next)
        if f_next == 0.0:
            return x_next
        if math.copysign(1.0, f_next) != math.copysign(1.0, f_lo):
            break
        x, f_lo = x_next, f_next
        if x > upper + 10.0:
            raise RuntimeError(f"no sign change found for nu={nu}")
    return optimize.brentq(lambda s: _jnu_reduced(nu, s), x, x_next,
                           xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


@dataclass(frozen=True)
class BurstTheoryParams:
    eta: float
    lam: float
    h: float
    nu: float
    j_nu_1: float
    t_crossover: float

    @property
    def decay_rate(self):
        """Exponential cut-off rate (eta-1)^2 h^(2(eta-1)) j^2 / 2."""
        return ((self.eta - 1.0) ** 2 * self.h ** (2.0 * (self.eta - 1.0))
                * self.j_nu_1 ** 2 / 2.0)


def burst_theory_params(eta, lam, h) -> BurstTheoryParams:
    if not h > 0:
        raise ValueError("threshold must be > 0")
    nu = bessel_index(eta, lam)
    j = bessel_first_zero(nu)
    tc = 2.0 / ((eta - 1.0) ** 2 * h ** (2.0 * (eta - 1.0)) * j ** 2)
    return BurstTheoryParams(eta, lam, h, nu, j, tc)


def burst_pdf_theory(p: BurstTheoryParams, T):
    """Unnormalized asymptotic burst-duration density.

    ``T**-1.5`` below ``t_crossover`` and ``exp(-rate T) / T`` above it.  The
    two branches are not matched at the seam; see :func:`burst_pdf_branches`.
    """
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise ValueError("T must be > 0")
    power, expo = burst_pdf_branches(p, T)
    out = np.where(T < p.t_crossover, power, expo)
    return float(out) if out.ndim == 0 else out


def burst_pdf_branches(p: BurstTheoryParams, T):
    T = np.asarray(T, dtype=float)
    return T ** -1.5, np.exp(-p.decay_rate * T) / T


def exponential_tail_rate(durations, t_from):
    """Maximum-likelihood decay rate of ``durations >= t_from`` under a pure
    exponential tail.  Returns ``(rate, stderr, n)``."""
    d = np.asarray(durations, dtype=float)
    tail = d[d >= t_from] - t_from
    if tail.size < 10:
        raise ValueError(f"only {tail.size} durations beyond {t_from}")
    rate = 1.0 / tail.mean()
    return rate, rate / math.sqrt(tail.size), int(tail.size)
