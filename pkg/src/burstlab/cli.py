"""Command line entry point: ``burstlab <subcommand> ...``.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .fbm import FbmParams, simulate_fbm, simulate_fgn
from .passage import extract_bursts, log_histogram
from .pipeline import (ConfigError, build_config, emit_report, load_config,
                       parse_config_text, run_pipeline, validate_report)
from .pointprocess import PoissonPipelineConfig, denoise_activity, generate_events
from .sde import ReturnModelParams, SdeParams, generate_model_returns, simulate_sde
from .series import read_events, read_series, write_events, write_series
from .spectral import (fit_duration_exponent_mle, fit_power_law,
                       fit_two_regime_psd, hurst_from_beta, welch_psd)

log = logging.getLogger("burstlab")


def _cfg(args, **extra):
    """Config from ``--config`` (if any) with command line overrides."""
    overrides = {"seed": args.seed, "threads": args.threads, **extra}
    if args.config:
        return load_config(args.config, **overrides)
    return build_config({}, **overrides)


def _raw_cfg(args):
    if not args.config:
        return {}
    return parse_config_text(Path(args.config).read_text(encoding="utf-8"))


def _pick(cli_value, raw, key, default):
    if cli_value is not None:
        return cli_value
    return type(default)(raw[key]) if key in raw else default


def _seed(args, raw):
    if args.seed is not None:
        return args.seed
    if "seed" in raw:
        return int(raw["seed"])
    seed = int(np.random.SeedSequence().entropy % (2 ** 63))
    log.warning("no seed given; using %d", seed)
    return seed


def _print(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_simulate_sde(args):
    raw = _raw_cfg(args)
    p = SdeParams(_pick(args.eta, raw, "sde_eta", 2.5),
                  _pick(args.lam, raw, "sde_lambda", 3.0),
                  _pick(args.x_min, raw, "sde_x_min", 1.0),
                  _pick(args.x_max, raw, "sde_x_max", 1e3),
                  _pick(args.kappa, raw, "sde_kappa", 0.1),
                  args.x0)
    dt = _pick(args.dt, raw, "sde_dt", 1e-5)
    n = _pick(args.samples, raw, "sde_samples", 1_000_000)
    seed = _seed(args, raw)
    if args.returns is not None:
        out = generate_model_returns(p, ReturnModelParams(args.returns, 1.0, dt), n * dt, seed)
    else:
        out = simulate_sde(p, n * dt, dt, seed)
    write_series(args.out, out)
    print(f"wrote {len(out)} samples to {args.out} (seed {seed})")


def cmd_simulate_fbm(args):
    raw = _raw_cfg(args)
    p = FbmParams(_pick(args.hurst, raw, "fbm_hurst", 0.5),
                  _pick(args.n, raw, "fbm_n", 1 << 16),
                  _pick(args.dt, raw, "fbm_dt", 1.0),
                  _pick(args.sigma, raw, "fbm_sigma", 1.0))
    seed = _seed(args, raw)
    out = simulate_fgn(p, seed) if args.increments else simulate_fbm(p, seed)
    write_series(args.out, out)
    print(f"wrote {len(out)} samples to {args.out} (seed {seed})")


def cmd_simulate_events(args):
    raw = _raw_cfg(args)
    rate = read_series(args.rate)
    if args.scale != 1.0:
        rate = rate.with_values(rate.values * args.scale)
    seed = _seed(args, raw)
    ev = generate_events(rate, seed)
    write_events(args.out, ev)
    print(f"wrote {len(ev)} events to {args.out} (seed {seed})")


def cmd_denoise(args):
    raw = _raw_cfg(args)
    cfg = PoissonPipelineConfig(_pick(args.bin_seconds, raw, "bin_seconds", 60.0),
                                _pick(args.ma_window, raw, "ma_window", 10))
    trace = []
    out, clamped = denoise_activity(read_events(args.events), cfg, trace=trace,
                                    return_clamped=True)
    write_series(args.out, out)
    print(f"stages: {' -> '.join(trace)}; {len(out)} bins; clamped {clamped}")


def cmd_bursts(args):
    s = read_series(args.input)
    if args.normalize:
        s = s.with_values(s.values / s.values.std())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for h in args.h:
        bs = extract_bursts(s, h, args.mode)
        rows = []
        for kind in ("burst", "interburst"):
            d, st = bs.durations(kind), bs.starts(kind)
            rows += [(kind, a, a + b, b) for a, b in zip(st, d)]
        rows.sort(key=lambda r: r[1])
        with open(out / f"durations_h{h:g}.csv", "w", encoding="utf-8") as fh:
            fh.write("kind,start,end,duration\n")
            for kind, a, b, c in rows:
                fh.write(f"{kind},{a:.15g},{b:.15g},{c:.15g}\n")
        summary.append({"h": h, "bursts": int(bs.bursts.size),
                        "interbursts": int(bs.interbursts.size),
                        "edge_censored": bs.edge_censored})
    _print(summary)


def cmd_psd(args):
    s = read_series(args.input)
    spec = welch_psd(s, min(args.segment, len(s)), args.overlap)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("f,power\n")
        for f, p in zip(spec.frequencies, spec.power):
            fh.write(f"{f:.15g},{p:.15g}\n")
    binned = welch_psd(s, min(args.segment, len(s)), args.overlap, args.bins_per_decade)
    single = fit_power_law(binned, args.lo, args.hi)
    result = {"single": single.to_dict(), "hurst": hurst_from_beta(single.exponent)}
    if args.two_regime:
        result["two_regime"] = fit_two_regime_psd(binned, lo=args.lo, hi=args.hi).to_dict()
    _print(result)


def _read_durations(path, kind):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "kind,start,end,duration":
        raise ValueError(f"{path}: expected header kind,start,end,duration")
    out = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"{path}:{i}: expected 4 fields")
        if parts[0] == kind:
            out.append(float(parts[3]))
    return np.array(out)


def cmd_fit(args):
    d = _read_durations(args.input, args.kind)
    fit = fit_duration_exponent_mle(d, args.lo, args.hi, args.lattice)
    result = {"mle": fit.to_dict()}
    try:
        hist = log_histogram(d, args.bins_per_decade)
        result["histogram_slope"] = fit_power_law(hist, args.lo, args.hi,
                                                  skip_first=True).to_dict()
    except ValueError as exc:
        result["histogram_slope_error"] = str(exc)
    _print(result)


def cmd_run(args):
    cfg = _cfg(args, out=args.out)
    report = run_pipeline(cfg)
    out = args.out or cfg.out
    manifest = emit_report(report, out)
    v = report.data["verdict"]
    digest = hashlib.sha256(report.to_json().encode()).hexdigest()
    print(f"verdict: {v['label']} (exponent {v['exponent']}, stderr {v['stderr']})")
    print(f"report sha256 {digest}; {len(manifest['files'])} files in {out}")


def cmd_report(args):
    """Check a report directory: schema and manifest hashes."""
    directory = Path(args.dir)
    data = json.loads((directory / "report.json").read_text(encoding="utf-8"))
    validate_report(data)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    bad = []
    for entry in manifest["files"]:
        path = directory / entry["name"]
        if not path.is_file() or hashlib.sha256(path.read_bytes()).hexdigest() != entry["sha256"]:
            bad.append(entry["name"])
    if bad:
        raise ValueError(f"manifest mismatch: {', '.join(bad)}")
    v = data["verdict"]
    print(f"schema {data['schema']} ok; {len(manifest['files'])} files verified")
    print(f"verdict: {v['label']}")
    for e in v["per_threshold"]:
        print(f"  h={e['h']:g} {e['kind']}: alpha={e['exponent']:.4f} "
              f"+/- {e['stderr']:.4f}  z(3/2)={e['markov_z']:.2f}")
    psd = data["psd"]
    if psd.get("single"):
        print(f"psd beta={psd['single']['exponent']:.4f} H={psd.get('hurst')}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output file or directory")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="burstlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-sde", parents=[common], help="simulate the nonlinear SDE")
    p.add_argument("--eta", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--x-min", type=float)
    p.add_argument("--x-max", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--x0", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--returns", type=float, metavar="A0",
                   help="emit modulated returns with this a0 instead of x")
    p.set_defaults(func=cmd_simulate_sde, out_default="sde.csv")

    p = sub.add_parser("simulate-fbm", parents=[common], help="simulate fBm (or fGn)")
    p.add_argument("--hurst", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--increments", action="store_true", help="write fGn instead")
    p.set_defaults(func=cmd_simulate_fbm, out_default="fbm.csv")

    p = sub.add_parser("simulate-events", parents=[common],
                       help="Poisson events from a rate series CSV (events/s)")
    p.add_argument("--rate", required=True)
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate_events, out_default="events.csv")

    p = sub.add_parser("denoise", parents=[common], help="events -> recovered activity")
    p.add_argument("--events", required=True)
    p.add_argument("--bin-seconds", type=float)
    p.add_argument("--ma-window", type=int)
    p.set_defaults(func=cmd_denoise, out_default="activity.csv")

    p = sub.add_parser("bursts", parents=[common], help="burst/inter-burst durations")
    p.add_argument("--input", required=True)
    p.add_argument("--h", type=float, nargs="+", required=True)
    p.add_argument("--mode", choices=("samples", "interpolated"), default="samples")
    p.add_argument("--no-normalize", dest="normalize", action="store_false")
    p.set_defaults(func=cmd_bursts, out_default="bursts")

    p = sub.add_parser("psd", parents=[common], help="Welch PSD and power-law fit")
    p.add_argument("--input", required=True)
    p.add_argument("--segment", type=int, default=4096)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--bins-per-decade", type=int, default=10)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--two-regime", action="store_true")
    p.set_defaults(func=cmd_psd, out_default="spectrum.csv")

    p = sub.add_parser("fit", parents=[common], help="duration exponent from a durations CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", choices=("burst", "interburst"), default="burst")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--lattice", type=float, help="sampling step for lattice durations")
    p.add_argument("--bins-per-decade", type=int, default=8)
    p.set_defaults(func=cmd_fit, out_default=None)

    p = sub.add_parser("run", parents=[common], help="full config-driven pipeline")
    p.set_defaults(func=cmd_run, out_default=None)

    p = sub.add_parser("report", parents=[common], help="verify and summarize a report directory")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report, out_default=None)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.out is None and args.out_default is not None:
        args.out = args.out_default
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, MemoryError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
