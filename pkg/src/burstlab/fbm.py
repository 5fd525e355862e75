"""Exact fractional Gaussian noise / fractional Brownian motion sampling.

Circulant embedding (Davies-Harte) is the default.  If the embedding has a
negative eigenvalue the sampler falls back to exact sequential conditioning
with the Durbin-Levinson recursion, which is O(n^2) and therefore capped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .series import UniformSeries

log = logging.getLogger(__name__)

# circulant embedding keeps ~6 arrays of 2n complex128 numbers alive
_BYTES_PER_SAMPLE = 6 * 2 * 16
DEFAULT_MEMORY_BUDGET = 4 << 30
LEVINSON_MAX_N = 1 << 15


@dataclass(frozen=True)
class FbmParams:
    hurst: float
    n: int
    dt: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if not 0 < self.hurst < 1:
            raise ValueError("hurst must lie in (0, 1)")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not self.dt > 0 or not self.sigma > 0:
            raise ValueError("dt and sigma must be > 0")


def fgn_autocovariance(hurst, sigma, k):
    """gamma(k) = sigma^2/2 (|k+1|^2H - 2|k|^2H + |k-1|^2H)."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    g = 0.5 * sigma ** 2 * (np.abs(k + 1) ** h2 - 2 * k ** h2 + np.abs(k - 1) ** h2)
    return float(g) if g.ndim == 0 else g


def circulant_eigenvalues(n, hurst):
    gamma = fgn_autocovariance(hurst, 1.0, np.arange(n + 1))
    row = np.concatenate((gamma, gamma[-2:0:-1]))
    return np.fft.fft(row).real


def _circulant(n, hurst, rng, eig):
    m = eig.size
    w = np.sqrt(eig / m) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    return np.fft.fft(w).real[:n]


def _levinson(n, hurst, rng):
    gamma = fgn_autocovariance(hurst, 1.0, np.arange(n))
    z = rng.standard_normal(n)
    out = np.empty(n)
    phi = np.zeros(n)
    v = gamma[0]
    out[0] = np.sqrt(v) * z[0]
    for i in range(1, n):
        prev = phi[:i - 1].copy()
        k = (gamma[i] - prev @ gamma[i - 1:0:-1]) / v
        phi[:i - 1] = prev - k * prev[::-1]
        phi[i - 1] = k
        v *= 1.0 - k * k
        out[i] = phi[:i] @ out[i - 1::-1] + np.sqrt(v) * z[i]
    return out


def fgn_sample(n, hurst, rng, method="auto", memory_budget=DEFAULT_MEMORY_BUDGET):
    """Unit-variance fGn of length ``n``; returns ``(values, method_used)``."""
    if method not in ("auto", "circulant", "levinson"):
        raise ValueError(f"unknown method {method!r}")
    if method != "levinson":
        if n * _BYTES_PER_SAMPLE > memory_budget:
            raise MemoryError(
                f"n={n} needs ~{n * _BYTES_PER_SAMPLE >> 20} MiB, over the "
                f"{memory_budget >> 20} MiB budget")
        eig = circulant_eigenvalues(n, hurst)
        # round-off can leave tiny negatives when the embedding is exact
        tol = 1e-10 * eig.max()
        if eig.min() >= -tol:
            return _circulant(n, hurst, rng, np.maximum(eig, 0.0)), "circulant"
        if method == "circulant":
            raise ValueError("circulant embedding not non-negative definite")
        log.info("circulant embedding failed for n=%d H=%g; using levinson", n, hurst)
    if n > LEVINSON_MAX_N:
        raise MemoryError(f"levinson fallback limited to n <= {LEVINSON_MAX_N}")
    return _levinson(n, hurst, rng), "levinson"


def simulate_fgn(params: FbmParams, seed, method="auto") -> UniformSeries:
    rng = np.random.default_rng(seed)
    values, used = fgn_sample(params.n, params.hurst, rng, method)
    log.debug("fgn n=%d H=%g via %s", params.n, params.hurst, used)
    return UniformSeries(params.sigma * values, params.dt, 0.0)


def simulate_fbm(params: FbmParams, seed, method="auto") -> UniformSeries:
    """Cumulative sum of fGn; the first value is the first increment."""
    fgn = simulate_fgn(params, seed, method)
    return fgn.with_values(np.cumsum(fgn.values), t0=params.dt)


def fbm_passage_exponent_theory(hurst):
    """Positive exponent ``2 - H`` of the burst-duration density T^(H-2)."""
    if not 0 < hurst < 1:
        raise ValueError("hurst must lie in (0, 1)")
    return 2.0 - hurst
