"""PSD slopes of the SDE and of fBm against their theoretical values."""

import argparse

from burstlab.fbm import FbmParams, simulate_fbm
from burstlab.passage import log_histogram
from burstlab.sde import SdeParams, psd_exponent_theory, simulate_sde
from burstlab.spectral import fit_power_law, welch_psd


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=202)
    args = ap.parse_args(argv)

    for eta, lam in ((2.5, 3.0), (2.5, 4.0), (2.0, 3.0)):
        p = SdeParams(eta=eta, lam=lam)
        x = simulate_sde(p, args.samples * 1e-5, 1e-5, args.seed)
        beta = fit_power_law(welch_psd(x, 1 << 16, bins_per_decade=10), 10.0, 1e3)
        slope = fit_power_law(log_histogram(x.values, 10), 10.0, 100.0)
        print(f"eta={eta} lambda={lam}: beta={beta.exponent:.3f} "
              f"(theory {psd_exponent_theory(p)[0]:.3f}), pdf slope {-slope.exponent:.3f}")
    for h in (0.3, 0.5, 0.7):
        x = simulate_fbm(FbmParams(h, 1 << 21), args.seed)
        beta = fit_power_law(welch_psd(x, 1 << 16, bins_per_decade=10), 1e-4, 1e-2)
        print(f"fBm H={h}: beta={beta.exponent:.3f} (theory {2 * h + 1:.1f})")


if __name__ == "__main__":
    main()
