#!/usr/bin/env python3
"""Neck decompositions of two crossing lines as the scale floor halves."""

import argparse
import json
import time

from reifenberg.generators import perpendicular_planes
from reifenberg.neck import NeckParams, neck_decompose


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spacing-exp", type=int, default=10)
    ap.add_argument("--floors", default="6,7,8", help="exponents e of r_min = 2^-e")
    ap.add_argument("--gamma", type=float, default=20.0)
    ap.add_argument("--save", help="write the last decomposition here")
    a = ap.parse_args(argv)
    m = perpendicular_planes(2, 1, 1.0, 2.0 ** -a.spacing_exp)
    D = None
    for e in (int(v) for v in a.floors.split(",")):
        p = NeckParams(k=1, delta=0.01, epsilon=0.05, nu=0.1, tau=0.05, r_min=2.0 ** -e)
        t = time.perf_counter()
        D = neck_decompose(m, p, a.gamma)
        row = {"r_min": p.r_min, "seconds": round(time.perf_counter() - t, 2), **D.tallies(), "labels": D.stats["labels"]}
        print(json.dumps(row, sort_keys=True), flush=True)
    if a.save and D is not None:
        with open(a.save, "w") as fh:
            fh.write(D.to_json())


if __name__ == "__main__":
    main()
