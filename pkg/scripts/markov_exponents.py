"""Duration exponents of the unit-std SDE signal at several thresholds."""

import argparse
import time

from burstlab.passage import extract_bursts
from burstlab.sde import SdeParams, simulate_sde
from burstlab.series import normalize_unit_std
from burstlab.spectral import fit_duration_exponent_mle

CASES = [(0.3, "burst"), (0.4, "burst"), (0.67, "burst"),
         (1.0, "interburst"), (1.5, "interburst"), (2.5, "interburst")]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta", type=float, default=2.5)
    ap.add_argument("--lam", type=float, default=3.0)
    ap.add_argument("--samples", type=int, default=10_000_000)
    ap.add_argument("--dt", type=float, default=1e-5)
    ap.add_argument("--seed", type=int, default=101)
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    x = simulate_sde(SdeParams(args.eta, args.lam), args.samples * args.dt, args.dt, args.seed)
    x, scale = normalize_unit_std(x)
    print(f"simulated {len(x)} samples in {time.perf_counter() - t0:.1f}s; "
          f"std {scale:.3f}, unit-std minimum {x.values.min():.3f}")
    lo, hi = 10 * args.dt, 1000 * args.dt
    for h, kind in CASES:
        d = extract_bursts(x, h).durations(kind)
        try:
            fit = fit_duration_exponent_mle(d, lo, hi, lattice=args.dt)
            print(f"h={h:<5g} {kind:<10} n={d.size:<7d} alpha={fit.exponent:.3f} "
                  f"+/- {fit.stderr:.3f}")
        except ValueError as exc:
            print(f"h={h:<5g} {kind:<10} n={d.size:<7d} no fit: {exc}")


if __name__ == "__main__":
    main()
