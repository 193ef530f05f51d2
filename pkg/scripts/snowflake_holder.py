#!/usr/bin/env python3
"""Holder envelopes of the numerical Reifenberg map on snowflake curves.

Writes one CSV row per delta: delta, target, lower, upper, seconds.
"""

import argparse
import csv
import sys
import time
import warnings

from reifenberg.generators import holder_target, snowflake
from reifenberg.reifmap import ReifmapConfig, build_reifenberg_map, holder_exponent


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--deltas", default="0.05,0.1,0.15,0.2,0.25,0.3")
    ap.add_argument("--iters", type=int, default=6)
    ap.add_argument("--far-field", action="store_true")
    ap.add_argument("--out", default="-")
    a = ap.parse_args(argv)
    cfg = ReifmapConfig(far_field=a.far_field)
    fh = sys.stdout if a.out == "-" else open(a.out, "w", newline="")
    w = csv.writer(fh)
    w.writerow(["delta", "target", "lower", "upper", "seconds"])
    for d in (float(v) for v in a.deltas.split(",")):
        t = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            M = build_reifenberg_map(snowflake(d, a.iters).vertices, 1, a.iters, cfg)
        lo, hi = holder_exponent(M)
        w.writerow([d, f"{holder_target(d):.6f}", f"{lo:.6f}", f"{hi:.6f}", f"{time.perf_counter() - t:.2f}"])
        fh.flush()


if __name__ == "__main__":
    main()
