"""Config-driven orchestration: source -> filter -> normalize -> bursts ->
duration fits + PSD fits -> verdict -> report files.

Configs are flat ``key = value`` text files (``#`` comments, lists comma
separated).  A ``preset`` fills in defaults for the standard workflows:

* ``activity``: bin 60 s -> Anscombe -> MA(10) -> inverse, thresholds
  0.3/0.4/0.67 (bursts) and 1/1.5/2.5 (inter-bursts);
* ``returns``: log returns -> rolling std(10), thresholds 0.3/0.4/0.67 and
  1/1.5/2;
* ``daily``: like ``returns`` over several pooled series, thresholds
  0.3/0.4/0.67 and 1.5/2.5/3.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .fbm import FbmParams, simulate_fbm
from .passage import extract_bursts, log_histogram, pool_durations
from .pointprocess import (PoissonPipelineConfig, denoise_activity, denoise_counts,
                           generate_binned_events)
from .sde import ReturnModelParams, SdeParams, generate_model_returns, simulate_sde
from .series import (UniformSeries, log_returns, normalize_unit_std,
                     read_events, read_series, read_ticks, rolling_std)
from .spectral import (average_spectra, fit_duration_exponent_mle, fit_power_law,
                       fit_two_regime_psd, hurst_from_beta, log_bin_spectrum,
                       welch_psd)

SCHEMA_ID = "burstlab-report/1"
MARKOV_EXPONENT = 1.5


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# ------------------------------------------------------------------ config


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    if isinstance(s, (list, tuple)):
        return tuple(float(x) for x in s)
    return tuple(float(x) for x in str(s).split(",") if x.strip())


def _strs(s):
    if isinstance(s, (list, tuple)):
        return tuple(str(x) for x in s)
    return tuple(x.strip() for x in str(s).split(",") if x.strip())


def _opt_float(s):
    if s is None or str(s).strip().lower() in ("", "none", "auto"):
        return None
    return float(s)


def _opt_int(s):
    if s is None or str(s).strip().lower() in ("", "none", "auto"):
        return None
    return int(s)


def _int(s):
    f = float(s)
    if f != int(f):
        raise ValueError(f"not an integer: {s!r}")
    return int(f)


def _opt(parse, default):
    return field(default=default, metadata={"parse": parse})


@dataclass(frozen=True)
class PipelineConfig:
    preset: str = _opt(str, "custom")
    source: str = _opt(str, "sde")
    input: tuple = _opt(_strs, ())
    input_kind: str = _opt(str, "series")
    splice_gaps: bool = _opt(_bool, False)
    filter: str = _opt(str, "none")
    rolling_window: int = _opt(_int, 10)
    bin_seconds: float = _opt(float, 60.0)
    ma_window: int = _opt(_int, 10)
    normalize: bool = _opt(_bool, True)
    burst_thresholds: tuple = _opt(_floats, ())
    interburst_thresholds: tuple = _opt(_floats, ())
    duration_mode: str = _opt(str, "samples")
    bins_per_decade: int = _opt(_int, 8)
    fit_lo: float | None = _opt(_opt_float, None)
    fit_hi: float | None = _opt(_opt_float, None)
    psd_segment: int = _opt(_int, 4096)
    psd_overlap: float = _opt(float, 0.5)
    psd_bins_per_decade: int = _opt(_int, 10)
    psd_lo: float | None = _opt(_opt_float, None)
    psd_hi: float | None = _opt(_opt_float, None)
    sde_eta: float = _opt(float, 2.5)
    sde_lambda: float = _opt(float, 3.0)
    sde_x_min: float = _opt(float, 1.0)
    sde_x_max: float = _opt(float, 1e3)
    sde_kappa: float = _opt(float, 0.1)
    sde_x0: float | None = _opt(_opt_float, None)
    sde_dt: float = _opt(float, 1e-5)
    sde_samples: int = _opt(_int, 1_000_000)
    sde_runs: int = _opt(_int, 1)
    rate_scale: float = _opt(float, 100.0)
    event_sampling: str = _opt(str, "poisson")
    return_a0: float = _opt(float, 10.0)
    fbm_hurst: float = _opt(float, 0.5)
    fbm_n: int = _opt(_int, 1 << 16)
    fbm_paths: int = _opt(_int, 1)
    fbm_dt: float = _opt(float, 1.0)
    fbm_sigma: float = _opt(float, 1.0)
    seed: int | None = _opt(_opt_int, None)
    out: str = _opt(str, "report")
    threads: int = _opt(_int, 1)

    def snapshot(self):
        return {k: list(v) if isinstance(v, tuple) else v
                for k, v in asdict(self).items() if k not in ("out", "threads")}

    @property
    def thresholds(self):
        return sorted(set(self.burst_thresholds) | set(self.interburst_thresholds))


PRESETS = {
    "custom": {},
    "activity": {"filter": "anscombe", "normalize": "true",
                 "burst_thresholds": "0.3,0.4,0.67",
                 "interburst_thresholds": "1,1.5,2.5"},
    "returns": {"filter": "rolling-std", "rolling_window": "10", "normalize": "true",
                "burst_thresholds": "0.3,0.4,0.67",
                "interburst_thresholds": "1,1.5,2"},
    "daily": {"filter": "rolling-std", "rolling_window": "10", "normalize": "true",
              "burst_thresholds": "0.3,0.4,0.67",
              "interburst_thresholds": "1.5,2.5,3"},
}

_SOURCES = ("sde", "fbm", "events", "csv")
_FILTERS = ("none", "anscombe", "rolling-std")


def parse_config_text(text):
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError([f"unparseable config: {exc}"]) from None
    return dict(parser["config"])


def build_config(raw=None, base_dir=None, **overrides) -> PipelineConfig:
    """Merge defaults, preset, ``raw`` key-values and ``overrides``; every
    problem is collected and raised together as a :class:`ConfigError`."""
    raw = dict(raw or {})
    raw.update({k: v for k, v in overrides.items() if v is not None})
    problems = []
    known = {f.name: f for f in fields(PipelineConfig)}
    for k in raw:
        if k not in known:
            problems.append(f"unknown key {k!r}")
    preset = str(raw.get("preset", "custom"))
    if preset not in PRESETS:
        problems.append(f"unknown preset {preset!r}")
        preset = "custom"
    merged = {**PRESETS[preset], **{k: v for k, v in raw.items() if k in known}}
    values = {}
    for name, value in merged.items():
        try:
            values[name] = known[name].metadata["parse"](value)
        except (TypeError, ValueError) as exc:
            problems.append(f"{name}: {exc}")
    # values that failed to parse fall back to defaults so the remaining
    # checks still run and every problem is reported at once
    if base_dir is not None and "input" in values:
        values["input"] = tuple(str(Path(base_dir, p)) if not Path(p).is_absolute() else p
                                for p in values["input"])
    cfg = PipelineConfig(**values)
    problems.extend(validate_config(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path, **overrides) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from None
    return build_config(parse_config_text(text), base_dir=path.parent, **overrides)


def validate_config(cfg: PipelineConfig):
    p = []
    if cfg.source not in _SOURCES:
        p.append(f"source must be one of {_SOURCES}")
    if cfg.filter not in _FILTERS:
        p.append(f"filter must be one of {_FILTERS}")
    if cfg.source in ("events", "csv"):
        if not cfg.input:
            p.append(f"source {cfg.source} needs input paths")
        for path in cfg.input:
            if not Path(path).is_file():
                p.append(f"input file not found: {path}")
    if cfg.source == "events" and cfg.filter != "anscombe":
        p.append("events source requires filter = anscombe")
    if cfg.source == "fbm" and cfg.filter != "none":
        p.append("fbm source supports only filter = none")
    if cfg.source == "csv":
        if cfg.input_kind not in ("series", "ticks"):
            p.append("input_kind must be series or ticks")
        if cfg.filter == "anscombe":
            p.append("csv source cannot use the anscombe filter (use events)")
        if cfg.input_kind == "ticks" and cfg.filter != "rolling-std":
            p.append("ticks input requires filter = rolling-std")
    if not cfg.thresholds:
        p.append("at least one threshold is required")
    if any(h < 0 or not math.isfinite(h) for h in cfg.thresholds):
        p.append("thresholds must be finite and >= 0")
    if cfg.rolling_window < 2:
        p.append("rolling_window must be >= 2")
    if cfg.ma_window < 1:
        p.append("ma_window must be >= 1")
    if cfg.bin_seconds <= 0:
        p.append("bin_seconds must be > 0")
    if cfg.duration_mode not in ("samples", "interpolated"):
        p.append("duration_mode must be samples or interpolated")
    if cfg.bins_per_decade < 1 or cfg.psd_bins_per_decade < 1:
        p.append("bins per decade must be >= 1")
    if cfg.psd_segment < 16:
        p.append("psd_segment must be >= 16")
    if not 0 <= cfg.psd_overlap < 1:
        p.append("psd_overlap must lie in [0, 1)")
    if cfg.fit_lo is not None and cfg.fit_hi is not None and cfg.fit_lo >= cfg.fit_hi:
        p.append("fit_lo must be < fit_hi")
    if cfg.psd_lo is not None and cfg.psd_hi is not None and cfg.psd_lo >= cfg.psd_hi:
        p.append("psd_lo must be < psd_hi")
    if cfg.sde_runs < 1 or cfg.fbm_paths < 1 or cfg.threads < 1:
        p.append("sde_runs, fbm_paths and threads must be >= 1")
    if cfg.sde_samples < 100 or cfg.sde_dt <= 0:
        p.append("sde_samples must be >= 100 and sde_dt > 0")
    if cfg.rate_scale <= 0:
        p.append("rate_scale must be > 0")
    if cfg.event_sampling not in ("poisson", "events"):
        p.append("event_sampling must be poisson or events")
    if cfg.source == "sde":
        try:
            _sde_params(cfg)
        except ValueError as exc:
            p.append(f"sde parameters: {exc}")
    if cfg.source == "fbm":
        try:
            FbmParams(cfg.fbm_hurst, cfg.fbm_n, cfg.fbm_dt, cfg.fbm_sigma)
        except ValueError as exc:
            p.append(f"fbm parameters: {exc}")
    if cfg.seed is not None and not 0 <= cfg.seed < 2 ** 63:
        p.append("seed must lie in [0, 2**63)")
    return p


def _sde_params(cfg):
    return SdeParams(cfg.sde_eta, cfg.sde_lambda, cfg.sde_x_min, cfg.sde_x_max,
                     cfg.sde_kappa, cfg.sde_x0)


# ------------------------------------------------------------------ report


@dataclass
class Report:
    """JSON-serializable ``data`` plus in-memory arrays written as CSV files."""

    data: dict
    durations: dict = field(default_factory=dict)
    spectrum: tuple | None = None
    spectrum_binned: tuple | None = None

    def to_json(self):
        return json.dumps(self.data, sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls(json.loads(text))


def build_id():
    h = hashlib.sha256()
    for path in sorted(Path(__file__).parent.glob("*.py")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return f"burstlab-{__version__}+{h.hexdigest()[:12]}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def _seeds(seed, n):
    return [int(s.generate_state(1, np.uint64)[0] >> np.uint64(1))
            for s in np.random.SeedSequence(seed).spawn(n)]


# ------------------------------------------------------------------ stages


def _source_series(cfg, seed, trace, notes, pool):
    """Analyzed (pre-normalization) series according to source and filter."""
    if cfg.source == "sde":
        params = _sde_params(cfg)
        seeds = _seeds(seed, cfg.sde_runs)
        duration = cfg.sde_samples * cfg.sde_dt

        def one(s):
            local = []
            if cfg.filter == "none":
                local.append("simulate_sde")
                return simulate_sde(params, duration, cfg.sde_dt, s), local, 0
            if cfg.filter == "rolling-std":
                local += ["simulate_sde", "model_returns", "rolling_std"]
                r = generate_model_returns(
                    params, ReturnModelParams(cfg.return_a0, 1.0, cfg.sde_dt),
                    duration, s)
                return rolling_std(r, cfg.rolling_window), local, 0
            x = simulate_sde(params, duration, cfg.sde_dt, s)
            b = cfg.bin_seconds
            rate = UniformSeries(cfg.rate_scale * x.values / b, b, 0.0)
            counts = generate_binned_events(rate, [s, 2], cfg.event_sampling)
            local += ["simulate_sde", "generate_events", "bin_counts"]
            pp = PoissonPipelineConfig(b, cfg.ma_window)
            out, clamped = denoise_counts(counts, pp, trace=local, return_clamped=True)
            return out, local, clamped

        results = list(pool.map(one, seeds))
    elif cfg.source == "fbm":
        fp = FbmParams(cfg.fbm_hurst, cfg.fbm_n, cfg.fbm_dt, cfg.fbm_sigma)
        results = list(pool.map(lambda s: (simulate_fbm(fp, s), ["simulate_fbm"], 0),
                                _seeds(seed, cfg.fbm_paths)))
    elif cfg.source == "events":
        pp = PoissonPipelineConfig(cfg.bin_seconds, cfg.ma_window)
        results = []
        for path in cfg.input:
            local = ["read_events"]
            out, clamped = denoise_activity(read_events(path), pp, trace=local,
                                            return_clamped=True)
            results.append((out, local, clamped))
    else:
        results = []
        for path in cfg.input:
            if cfg.input_kind == "ticks":
                r = log_returns(read_ticks(path, cfg.splice_gaps), 1)
                local = ["read_ticks", "log_returns"]
            else:
                r = read_series(path, cfg.splice_gaps)
                local = ["read_series"]
            if cfg.filter == "rolling-std":
                r = rolling_std(r, cfg.rolling_window)
                local.append("rolling_std")
            results.append((r, local, 0))
    series = [r[0] for r in results]
    trace.extend(results[0][1])
    notes["clamped"] = int(sum(r[2] for r in results))
    return series


def smoothing_window(cfg):
    if cfg.filter == "anscombe":
        return cfg.ma_window
    if cfg.filter == "rolling-std":
        return cfg.rolling_window
    return 1


def default_fit_range(cfg, dt):
    """Duration fit range: from ten smoothing windows (ten samples when
    unfiltered) over two decades; fBm runs up to ``n dt / 100``."""
    lo = cfg.fit_lo if cfg.fit_lo is not None else 10 * smoothing_window(cfg) * dt
    if cfg.fit_hi is not None:
        hi = cfg.fit_hi
    elif cfg.source == "fbm":
        hi = cfg.fbm_n * dt / 100
    else:
        hi = 100 * lo
    return lo, hi


def _duration_records(bs, kind, label):
    d = bs.durations(kind)
    s = bs.starts(kind)
    return np.column_stack([s, s + d, d]), label


def _fit_kind(durations, lo, hi, dt, cfg):
    out = {"n": int(durations.size), "fit_mle": None, "fit_hist": None,
           "histogram": None, "mean": None}
    if durations.size == 0:
        return out
    out["mean"] = float(durations.mean())
    hist = log_histogram(durations, cfg.bins_per_decade)
    out["histogram"] = hist.to_dict()
    lattice = dt if cfg.duration_mode == "samples" else None
    try:
        out["fit_mle"] = fit_duration_exponent_mle(durations, lo, hi, lattice).to_dict()
    except ValueError as exc:
        out["fit_mle_error"] = str(exc)
    try:
        out["fit_hist"] = fit_power_law(hist, lo, hi, skip_first=True).to_dict()
    except ValueError as exc:
        out["fit_hist_error"] = str(exc)
    return out


def _psd_block(series, cfg):
    seg = min(cfg.psd_segment, min(len(s) for s in series))
    spectra = [welch_psd(s, seg, cfg.psd_overlap) for s in series]
    raw = average_spectra(spectra)
    binned = log_bin_spectrum(raw, cfg.psd_bins_per_decade)
    block = {"segment_len": seg, "segments_used": raw.segments_used,
             "single": None, "two_regime": None}
    try:
        single = fit_power_law(binned, cfg.psd_lo, cfg.psd_hi)
        block["single"] = single.to_dict()
    except ValueError as exc:
        block["error"] = str(exc)
        return block, raw, binned
    beta, beta_se, used = single.exponent, single.stderr, "single"
    try:
        two = fit_two_regime_psd(binned, lo=cfg.psd_lo, hi=cfg.psd_hi)
        block["two_regime"] = two.to_dict()
        if two.reliable:
            beta, beta_se, used = two.beta1, two.low.stderr, "beta1"
    except ValueError as exc:
        block["two_regime_error"] = str(exc)
    H = hurst_from_beta(beta)
    block.update(beta_used=beta, beta_source=used, hurst=H,
                 hurst_stderr=beta_se / 2.0, hurst_in_unit_interval=bool(0 < H < 1))
    return block, raw, binned


def _verdict(entries, psd):
    if not entries:
        return {"label": "undetermined", "reason": "no duration fit succeeded",
                "exponent": None, "stderr": None, "markov_expected": MARKOV_EXPONENT,
                "fbm_expected": None, "markov_z": None, "fbm_z": None,
                "per_threshold": []}
    H = psd.get("hurst")
    H_se = psd.get("hurst_stderr") or 0.0
    fbm_expected = None if H is None else 2.0 - H

    def judge(alpha, se):
        mz = abs(alpha - MARKOV_EXPONENT) / se
        if fbm_expected is None:
            return mz, None, ("consistent with 3/2" if mz <= 2 else "inconsistent with 3/2")
        fz = abs(alpha - fbm_expected) / math.hypot(se, H_se)
        return mz, fz, ("consistent with 3/2" if mz <= fz else "inconsistent with 3/2")

    per = []
    for e in entries:
        mz, fz, label = judge(e["exponent"], e["stderr"])
        per.append({**e, "markov_z": mz, "fbm_z": fz, "label": label})
    w = np.array([1.0 / e["stderr"] ** 2 for e in entries])
    a = np.array([e["exponent"] for e in entries])
    alpha = float(np.sum(w * a) / w.sum())
    se = float(1.0 / math.sqrt(w.sum()))
    mz, fz, label = judge(alpha, se)
    return {"label": label, "exponent": alpha, "stderr": se,
            "markov_expected": MARKOV_EXPONENT, "fbm_expected": fbm_expected,
            "markov_z": mz, "fbm_z": fz, "per_threshold": per}


def run_pipeline(cfg: PipelineConfig) -> Report:
    seed = cfg.seed
    generated = seed is None
    if generated:
        seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    trace, notes = [], {}
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        raw_series = _source_series(cfg, seed, trace, notes, pool)
        scales = []
        series = []
        for s in raw_series:
            if cfg.normalize:
                s, scale = normalize_unit_std(s)
                scales.append(scale)
            series.append(s)
        if cfg.normalize:
            trace.append("normalize_unit_std")
        dt = series[0].dt
        span = sum(s.span for s in series)
        lo, hi = default_fit_range(cfg, dt)
        trace.append("extract_bursts")

        def per_threshold(h):
            sets = [extract_bursts(s, h, cfg.duration_mode) for s in series]
            block = {"h": h, "edge_censored": int(sum(b.edge_censored for b in sets)),
                     "censored_time": float(sum(b.censored_time for b in sets)),
                     "span": float(sum(b.span for b in sets)), "kinds": {}}
            records = {}
            for kind, primary in (("burst", h in cfg.burst_thresholds),
                                  ("interburst", h in cfg.interburst_thresholds)):
                pooled, _ = pool_durations(sets, kind)
                info = _fit_kind(pooled, lo, hi, dt, cfg)
                info["primary"] = bool(primary)
                block["kinds"][kind] = info
                recs = [_duration_records(b, kind, i) for i, b in enumerate(sets)]
                records[kind] = np.concatenate([r[0] for r in recs]) if recs else np.empty((0, 3))
            return block, records

        blocks = list(pool.map(per_threshold, cfg.thresholds))
    trace.append("fit_duration_exponent")
    psd, raw_spec, binned = _psd_block(series, cfg)
    trace.append("welch_psd")

    entries = []
    for block, _ in blocks:
        for kind, info in block["kinds"].items():
            fit = info["fit_mle"]
            if info["primary"] and fit is not None and fit["stderr"] > 0:
                entries.append({"h": block["h"], "kind": kind,
                                "exponent": fit["exponent"], "stderr": fit["stderr"]})
    verdict = _verdict(entries, psd)

    data = {
        "schema": SCHEMA_ID,
        "provenance": {"config": cfg.snapshot(), "seed": seed,
                       "seed_generated": generated, "build_id": build_id()},
        "trace": trace,
        "series": {"count": len(series), "samples": [len(s) for s in series],
                   "dt": dt, "span": span, "normalization_scales": scales,
                   "clamped_inputs": notes.get("clamped", 0)},
        "fit_range": [lo, hi],
        "thresholds": [b for b, _ in blocks],
        "psd": psd,
        "verdict": verdict,
    }
    durations = {(b["h"], kind): recs[kind] for b, recs in blocks for kind in recs}
    return Report(_clean(data), durations,
                  (raw_spec.frequencies, raw_spec.power),
                  (binned.frequencies, binned.power))


# ------------------------------------------------------------------ output

_FIT = {"type": ["object", "null"],
        "required": ["exponent", "intercept", "range", "stderr", "n", "method"]}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "provenance", "trace", "series", "fit_range",
                 "thresholds", "psd", "verdict"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "provenance": {"type": "object",
                       "required": ["config", "seed", "seed_generated", "build_id"]},
        "trace": {"type": "array", "items": {"type": "string"}},
        "series": {"type": "object", "required": ["count", "dt", "span"]},
        "fit_range": {"type": "array", "minItems": 2, "maxItems": 2},
        "thresholds": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["h", "edge_censored", "span", "kinds"],
                "properties": {"kinds": {
                    "type": "object",
                    "additionalProperties": {
                        "type": "object",
                        "required": ["n", "primary", "fit_mle", "fit_hist", "histogram"],
                        "properties": {"fit_mle": _FIT, "fit_hist": _FIT}}}}}},
        "psd": {"type": "object", "required": ["segment_len", "single", "two_regime"]},
        "verdict": {"type": "object",
                    "required": ["label", "exponent", "stderr", "markov_expected",
                                 "fbm_expected", "markov_z", "fbm_z", "per_threshold"],
                    "properties": {"label": {"enum": [
                        "consistent with 3/2", "inconsistent with 3/2", "undetermined"]}}},
    },
}


class ReportSchemaError(ValueError):
    pass


def validate_report(data):
    import jsonschema

    try:
        jsonschema.validate(data, REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ReportSchemaError(f"report fails {SCHEMA_ID}: {exc.message}") from None


def _htag(h):
    return format(h, "g")


def _hist_name(kind, h):
    return f"hist_{kind}_h{_htag(h)}"


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(format(float(v), ".15g") if not isinstance(v, str) else v
                              for v in row) + "\n")


def emit_plot_script(report: Report, directory) -> Path:
    """Gnuplot script: log-log duration PDFs per threshold with a -3/2 guide,
    and the log-binned PSD with its fitted segments and break frequency."""
    directory = Path(directory)
    d = report.data
    lines = ["# gnuplot script generated by burstlab",
             "set terminal pngcairo size 900,650",
             "set logscale xy", "set format xy '10^{%L}'", ""]
    for kind, title in (("burst", "burst duration T"), ("interburst", "inter-burst duration")):
        items = [(b["h"], b["kinds"][kind]) for b in d["thresholds"]
                 if b["kinds"][kind]["histogram"] is not None and b["kinds"][kind]["primary"]]
        if not items:
            continue
        h0, info0 = items[0]
        hist = info0["histogram"]
        dens = np.array(hist["density"])
        edges = np.array(hist["edges"])
        cen = np.sqrt(edges[1:] * edges[:-1])
        nz = np.flatnonzero(dens > 0)
        ref_x = cen[nz[min(1, nz.size - 1)]]
        ref_c = dens[nz[min(1, nz.size - 1)]] * ref_x ** 1.5
        lines += [f"set output 'pdf_{kind}.png'",
                  f"set title 'PDF of {title}'",
                  "set xlabel 'duration'", "set ylabel 'p'",
                  f"ref_{kind}(x) = {ref_c:.15g} * x**(-1.5)"]
        plots = [f"'{_hist_name(kind, h)}.csv' using 1:2 with points title 'h={_htag(h)}'"
                 for h, _ in items]
        plots.append(f"ref_{kind}(x) with lines lc rgb 'black' title 'slope -3/2'")
        lines.append("plot " + ", \\\n     ".join(plots))
        lines.append("")
    psd = d["psd"]
    if report.spectrum_binned is not None:
        lines += ["set output 'psd.png'", "set title 'Power spectral density'",
                  "set xlabel 'f'", "set ylabel 'S(f)'"]
        plots = ["'spectrum_logbinned.csv' using 1:2 with points title 'S(f)'"]
        two = psd.get("two_regime")
        if two is not None:
            for name, seg in (("b1", two["low"]), ("b2", two["high"])):
                lo, hi = seg["range"]
                lines.append(f"{name}(x) = (x >= {lo:.15g} && x <= {hi:.15g}) ? "
                             f"exp({seg['intercept']:.15g}) * x**(-{seg['exponent']:.15g}) : 1/0")
            fb = two["f_break"]
            lines += [f"set arrow 1 from {fb:.15g}, graph 0 to {fb:.15g}, graph 1 nohead dt 2",
                      f"set label 1 'f_{{break}} = {fb:.4g}' at {fb:.15g}, graph 0.92"]
            plots += [f"b1(x) with lines lw 2 title 'beta_1 = {two['beta1']:.3f}'",
                      f"b2(x) with lines lw 2 title 'beta_2 = {two['beta2']:.3f}'"]
        elif psd.get("single") is not None:
            s = psd["single"]
            lines.append(f"b1(x) = exp({s['intercept']:.15g}) * x**(-{s['exponent']:.15g})")
            plots.append(f"b1(x) with lines lw 2 title 'beta = {s['exponent']:.3f}'")
        lines.append("plot " + ", \\\n     ".join(plots))
    path = directory / "plots.gp"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def emit_report(report: Report, directory, plot=True):
    """Write report.json, duration/histogram/spectrum files, the plot script
    and a manifest with sha256 hashes.  Returns the manifest dict."""
    validate_report(report.data)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    def out(name):
        written.append(name)
        return directory / name

    out("report.json").write_text(report.to_json(), encoding="utf-8")
    for block in report.data["thresholds"]:
        h = block["h"]
        rows = []
        for kind in ("burst", "interburst"):
            recs = report.durations.get((h, kind))
            if recs is not None:
                rows += [(kind, *r) for r in recs]
        if report.durations:
            rows.sort(key=lambda r: r[1])
            _write_csv(out(f"durations_h{_htag(h)}.csv"), "kind,start,end,duration", rows)
        for kind, info in block["kinds"].items():
            hist = info["histogram"]
            if hist is None:
                continue
            name = _hist_name(kind, h)
            out(name + ".json").write_text(json.dumps(hist, sort_keys=True) + "\n",
                                           encoding="utf-8")
            e = np.array(hist["edges"])
            _write_csv(out(name + ".csv"), "center,density,count,lo,hi",
                       zip(np.sqrt(e[1:] * e[:-1]), hist["density"], hist["counts"],
                           e[:-1], e[1:]))
    if report.spectrum is not None:
        _write_csv(out("spectrum.csv"), "f,power", zip(*report.spectrum))
    if report.spectrum_binned is not None:
        _write_csv(out("spectrum_logbinned.csv"), "f,power", zip(*report.spectrum_binned))
    if plot:
        emit_plot_script(report, directory)
        written.append("plots.gp")
    manifest = {"schema": SCHEMA_ID,
                "files": [{"name": n, "bytes": (directory / n).stat().st_size,
                           "sha256": _sha256(directory / n)} for n in sorted(written)]}
    (directory / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest
