"""Studentised mean shift of the plug-in estimator against its second-order prediction.

For g(c) = c^p the spot error has variance about c^2 2M/(3N), so the plug-in
sum is shifted by roughly (1/2) g''(c) times that; in studentised units the
shift is about (p - 1) M / (3 sqrt(N)) (times the sign of p). Heston-bridge
paths, regular sampling.

    python3 scripts/plugin_bias.py --reps 200
"""

import argparse
import math

import numpy as np

from fourvol.config import config_from_dict
from fourvol.pipeline import run_montecarlo

FUNCTIONALS = {"power:2": 2.0, "power:0.5": 0.5, "inverse": -1.0, "log": 0.0}


def predicted(p, N, M):
    # log is the p -> 0+ limit of (c^p - 1)/p
    sign = 1.0 if p >= 0 else -1.0
    return (p - 1) * sign * M / (3 * math.sqrt(N))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--N", default="n^0.75")
    ap.add_argument("--M", default="n^0.3")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = config_from_dict({"simulation": {"model": "heston-bridge"}, "functionals": list(FUNCTIONALS),
                            "tuning": {"N": args.N, "M": args.M}, "replications": args.reps,
                            "workers": args.workers, "seed": 5})
    res = run_montecarlo(cfg, write=False)
    rec = next(r for r in res["records"] if r["error"] is None)
    N, M = next(iter(rec["results"].values()))["N"], next(iter(rec["results"].values()))["M"]
    print(f"N={N} M={M} reps={args.reps}")
    for fid, p in FUNCTIONALS.items():
        s = res["summary"][fid]
        se = s["std"] / math.sqrt(s["ok"])
        print(f"  {fid:>9}: mean z {s['mean']:+.3f} (se {se:.3f}), predicted {predicted(p, N, M):+.3f}, "
              f"coverage {100 * s['coverage']:.1f}%")


if __name__ == "__main__":
    main()
