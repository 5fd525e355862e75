"""Seeded verdict runs on SDE and fBm sources; prints the hit rate."""

import argparse
from collections import Counter

from burstlab.pipeline import build_config, run_pipeline

SDE = {"source": "sde", "sde_samples": "1000000", "burst_thresholds": "0.4,0.67",
       "interburst_thresholds": "1,1.5,2.5", "psd_lo": "10", "psd_hi": "1000"}
FBM = {"source": "fbm", "fbm_n": "65536", "fbm_paths": "32", "normalize": "false",
       "burst_thresholds": "0", "interburst_thresholds": "0"}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sde-runs", type=int, default=50)
    ap.add_argument("--fbm-runs", type=int, default=25, help="per Hurst exponent")
    args = ap.parse_args(argv)

    runs = ([("sde", {**SDE, "seed": str(s)}, "consistent with 3/2")
             for s in range(args.sde_runs)]
            + [(f"fbm H={h}", {**FBM, "fbm_hurst": h, "seed": str(off + s)},
                "inconsistent with 3/2")
               for h, off in (("0.3", 100), ("0.7", 200)) for s in range(args.fbm_runs)])
    hits = Counter()
    for name, raw, truth in runs:
        v = run_pipeline(build_config(raw)).data["verdict"]
        ok = v["label"] == truth
        hits[name, ok] += 1
        print(f"{name:<10} seed {raw['seed']:>4}: alpha={v['exponent']:.3f} "
              f"z32={v['markov_z']:.2f} zfbm={v['fbm_z']:.2f} {v['label']}"
              + ("" if ok else "  <-- wrong"))
    total = sum(n for (_, ok), n in hits.items() if ok)
    print(f"{total}/{len(runs)} correct")


if __name__ == "__main__":
    main()
