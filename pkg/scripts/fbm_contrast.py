"""Zero-level burst exponents of fBm compared with 2 - H."""

import argparse

from burstlab.fbm import FbmParams, simulate_fbm
from burstlab.passage import extract_bursts, pool_durations
from burstlab.spectral import fit_duration_exponent_mle


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hurst", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    ap.add_argument("--n", type=int, default=1 << 20)
    ap.add_argument("--paths", type=int, default=8)
    ap.add_argument("--seed", type=int, default=5000)
    args = ap.parse_args(argv)

    for h in args.hurst:
        sets = [extract_bursts(simulate_fbm(FbmParams(h, args.n), args.seed + i), 0.0)
                for i in range(args.paths)]
        for kind in ("burst", "interburst"):
            d, _ = pool_durations(sets, kind)
            fit = fit_duration_exponent_mle(d, 10.0, args.n / 100, lattice=1.0)
            print(f"H={h:.2f} {kind:<10} alpha={fit.exponent:.3f} +/- {fit.stderr:.3f} "
                  f"(2-H = {2 - h:.2f}, n={fit.n})")


if __name__ == "__main__":
    main()
