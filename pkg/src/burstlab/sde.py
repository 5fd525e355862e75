"""Nonlinear multiplicative SDE  dx = (eta - lam/2) x^(2 eta - 1) dt + x^eta dW.

Euler-Maruyama with a state-dependent step ``kappa**2 * x**(-2(eta-1))`` so the
relative diffusion per step stays near ``kappa``.  Steps are shortened to land
on every output grid point, and the state is folded back into
``[x_min, x_max]`` (reflecting walls).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numba
import numpy as np
from scipy import stats

from .series import UniformSeries, normalize_unit_std

if TYPE_CHECKING:
    from .passage import LogHistogram

_BLOCK = 1 << 20


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SdeParams:
    eta: float = 2.5
    lam: float = 3.0
    x_min: float = 1.0
    x_max: float = 1e3
    kappa: float = 0.1
    x0: float | None = None

    def __post_init__(self):
        if not self.eta > 1:
            raise ValueError("eta must be > 1")
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if not 0 < self.x_min < self.x_max or not math.isfinite(self.x_max):
            raise ValueError("need 0 < x_min < x_max < inf")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.x0 is None:
            object.__setattr__(self, "x0", float(self.x_min))
        if not self.x_min <= self.x0 <= self.x_max:
            raise ValueError("x0 must lie in [x_min, x_max]")


@dataclass(frozen=True)
class ReturnModelParams:
    a0: float = 0.0
    b0: float = 1.0
    delta: float = 1e-5

    def __post_init__(self):
        if not self.b0 > 0:
            raise ValueError("b0 must be > 0")
        if not self.a0 >= 0:
            raise ValueError("a0 must be >= 0")
        if not self.delta > 0:
            raise ValueError("delta must be > 0")


@numba.njit(cache=True, nogil=True)
def _grid_kernel(x, t, k, n_out, dt_out, eta, lam, x_min, x_max, kappa,
                 normals, out, noise):
    # Returns (x, t, k, used, status); status 0 ok/needs more normals,
    # 1 non-finite state, 2 left the domain.
    used = 0
    nn = normals.shape[0]
    drift_c = eta - 0.5 * lam
    p = 2.0 * (eta - 1.0)
    q = 2.0 * eta - 1.0
    k2 = kappa * kappa
    while k < n_out:
        t_next = k * dt_out
        while t < t_next:
            if used >= nn:
                return x, t, k, used, 0
            h = k2 * x ** (-p)
            last = h >= t_next - t
            if last:
                h = t_next - t
            z = normals[used] if noise else 0.0
            used += 1
            x = x + drift_c * x ** q * h + x ** eta * math.sqrt(h) * z
            if not math.isfinite(x):
                return x, t, k, used, 1
            if x < x_min:
                x = 2.0 * x_min - x
            if x > x_max:
                x = 2.0 * x_max - x
            if x < x_min or x > x_max:
                return x, t, k, used, 2
            t = t_next if last else t + h
        out[k] = x
        k += 1
    return x, t, k, used, 0


def simulate_sde(params: SdeParams, duration: float, dt_out: float, seed: int,
                 noise: bool = True) -> UniformSeries:
    """Integrate the SDE and sample it on ``t = 0, dt_out, 2 dt_out, ...``.

    ``noise=False`` zeroes the Wiener increments (deterministic drift only).
    Identical ``(params, duration, dt_out, seed)`` give identical output.
    """
    if not dt_out > 0:
        raise ValueError("dt_out must be > 0")
    n_out = int(math.floor(duration / dt_out + 1e-9))
    if n_out < 100:
        raise ValueError(f"duration {duration} shorter than 100 * dt_out")
    rng = np.random.default_rng(seed)
    out = np.empty(n_out)
    x, t, k, steps = float(params.x0), 0.0, 0, 0
    while k < n_out:
        z = rng.standard_normal(_BLOCK)
        x, t, k, used, status = _grid_kernel(
            x, t, k, n_out, dt_out, params.eta, params.lam, params.x_min,
            params.x_max, params.kappa, z, out, noise)
        steps += used
        if status == 1:
            raise SimulationError(f"non-finite state at internal step {steps}")
        if status == 2:
            raise SimulationError(
                f"state {x!r} escaped [{params.x_min}, {params.x_max}] at "
                f"internal step {steps}; reduce kappa")
    return UniformSeries(out, dt_out, 0.0)


def stationary_pdf_theory(params: SdeParams, x):
    """Normalized power-law density ``C x**-lam`` on ``[x_min, x_max]``."""
    x = np.asarray(x, dtype=float)
    if np.any((x < params.x_min) | (x > params.x_max)):
        raise ValueError("x outside [x_min, x_max]")
    lam, a, b = params.lam, params.x_min, params.x_max
    if abs(lam - 1.0) < 1e-12:
        c = 1.0 / math.log(b / a)
    else:
        c = (1.0 - lam) / (b ** (1.0 - lam) - a ** (1.0 - lam))
    out = c * x ** (-lam)
    return float(out) if out.ndim == 0 else out


def psd_exponent_theory(params: SdeParams):
    """Return ``(beta, hurst)`` with beta = 1 + (lam-3)/(2 eta - 2) = 2H + 1."""
    beta = 1.0 + (params.lam - 3.0) / (2.0 * params.eta - 2.0)
    return beta, (beta - 1.0) / 2.0


# ------------------------------------------------------------ scaling check


@numba.njit(cache=True, nogil=True)
def _horizon_kernel(i, x, t, n, x_start, horizon, eta, lam, x_min, x_max,
                    kappa, normals, out, touched):
    used = 0
    nn = normals.shape[0]
    drift_c = eta - 0.5 * lam
    p = 2.0 * (eta - 1.0)
    q = 2.0 * eta - 1.0
    k2 = kappa * kappa
    while i < n:
        while t < horizon:
            if used >= nn:
                return i, x, t, used, 0
            h = k2 * x ** (-p)
            last = h >= horizon - t
            if last:
                h = horizon - t
            x = x + drift_c * x ** q * h + x ** eta * math.sqrt(h) * normals[used]
            used += 1
            if not math.isfinite(x):
                return i, x, t, used, 1
            if x < x_min:
                x = 2.0 * x_min - x
                touched[i] = True
            if x > x_max:
                x = 2.0 * x_max - x
                touched[i] = True
            if x < x_min or x > x_max:
                return i, x, t, used, 2
            t = horizon if last else t + h
        out[i] = x
        i += 1
        x = x_start
        t = 0.0
    return i, x, t, used, 0


def sample_endpoints(params: SdeParams, x_start, horizon, n, seed):
    """Values ``x(horizon)`` of ``n`` independent paths started at ``x_start``.

    Returns ``(values, touched)`` where ``touched`` marks paths that hit a wall.
    """
    if not params.x_min < x_start < params.x_max:
        raise ValueError("x_start must be strictly inside (x_min, x_max)")
    rng = np.random.default_rng(seed)
    out = np.empty(n)
    touched = np.zeros(n, dtype=np.bool_)
    i, x, t = 0, float(x_start), 0.0
    while i < n:
        z = rng.standard_normal(_BLOCK)
        i, x, t, _, status = _horizon_kernel(
            i, x, t, n, float(x_start), float(horizon), params.eta, params.lam,
            params.x_min, params.x_max, params.kappa, z, out, touched)
        if status:
            raise SimulationError(f"path {i} failed (status {status})")
    return out, touched


@dataclass(frozen=True, eq=False)
class TransitionHistogramPair:
    direct: "LogHistogram"
    rescaled: "LogHistogram"
    scale_a: float
    t: float
    direct_samples: np.ndarray
    rescaled_samples: np.ndarray
    boundary_fraction: float
    contaminated: bool

    def ks_test(self):
        """Two-sample Kolmogorov-Smirnov ``(statistic, pvalue)``."""
        res = stats.ks_2samp(self.direct_samples, self.rescaled_samples)
        return float(res.statistic), float(res.pvalue)


def transition_scaling_samples(params: SdeParams, x_start, a, t, n, seed,
                               time_exponent=None, bins_per_decade=20):
    """Empirical check of  a P(a x', t | a x, 0) = P(x', a^(2(eta-1)) t | x, 0).

    ``direct``: paths from ``x_start`` run for ``a**time_exponent * t``.
    ``rescaled``: paths from ``a * x_start`` run for ``t``, divided by ``a``.
    ``time_exponent`` defaults to the correct ``2(eta - 1)``; pass another
    value for a negative control.
    """
    from .passage import log_histogram

    if not a > 0:
        raise ValueError("a must be > 0")
    if time_exponent is None:
        time_exponent = 2.0 * (params.eta - 1.0)
    ss = np.random.SeedSequence(seed).spawn(2)
    s1 = int(ss[0].generate_state(1)[0])
    s2 = int(ss[1].generate_state(1)[0])
    direct, t1 = sample_endpoints(params, x_start, a ** time_exponent * t, n, s1)
    far, t2 = sample_endpoints(params, a * x_start, t, n, s2)
    rescaled = far / a
    frac = float(max(t1.mean(), t2.mean()))
    lo = min(direct.min(), rescaled.min())
    hi = max(direct.max(), rescaled.max())
    return TransitionHistogramPair(
        direct=log_histogram(direct, bins_per_decade, lo, hi),
        rescaled=log_histogram(rescaled, bins_per_decade, lo, hi),
        scale_a=float(a), t=float(t), direct_samples=direct,
        rescaled_samples=rescaled, boundary_fraction=frac,
        contaminated=frac > 0.01)


# ------------------------------------------------------------ model returns


def generate_model_returns(sde: SdeParams, rm: ReturnModelParams, duration,
                           seed, normalize=True, return_path=False):
    """Returns ``r = b0 (1 + a0 x(t)) w_t`` on the ``rm.delta`` grid.

    ``x`` is exactly ``simulate_sde(sde, duration, rm.delta, seed)``; the
    Gaussian ``w_t`` come from an independent stream.  With ``normalize``
    the output is rescaled to unit sample std, which fixes ``b0``; otherwise
    ``rm.b0`` is used as given.
    """
    path = simulate_sde(sde, duration, rm.delta, seed)
    omega = np.random.default_rng([seed, 1]).standard_normal(len(path))
    raw = rm.b0 * (1.0 + rm.a0 * path.values) * omega
    r = path.with_values(raw)
    if normalize:
        r, _ = normalize_unit_std(r)
    return (r, path) if return_path else r
