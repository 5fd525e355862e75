"""Write the synthetic minute-tick fixture used by the pipeline tests.

Prices follow exp of cumulated SDE-modulated returns, stamped one minute
apart from an epoch offset.  Rerun only to regenerate the committed file.
"""

import argparse

import numpy as np

from burstlab.sde import ReturnModelParams, SdeParams, generate_model_returns
from burstlab.series import PriceSeries, write_ticks


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="tests/fixtures/ticks_synthetic.csv")
    ap.add_argument("--rows", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=20240101)
    ap.add_argument("--scale", type=float, default=2e-4, help="return units per model unit")
    args = ap.parse_args(argv)

    dt = 1e-5
    r = generate_model_returns(SdeParams(), ReturnModelParams(10.0, 1.0, dt),
                               (args.rows - 1) * dt, args.seed)
    logp = np.log(1.1) + np.concatenate([[0.0], np.cumsum(args.scale * r.values)])
    prices = PriceSeries(np.round(np.exp(logp), 6), 60.0, 1_600_000_020.0)
    write_ticks(args.out, prices)
    print(f"wrote {len(prices)} ticks to {args.out}")


if __name__ == "__main__":
    main()
