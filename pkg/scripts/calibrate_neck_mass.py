#!/usr/bin/env python3
"""Measure max mu(N_a) / (delta r_a^k) on plane-plus-dust measures.

The acceptance suite freezes the value found here as its baseline.
"""

import argparse

from reifenberg.generators import mixed_measure
from reifenberg.neck import NeckParams, neck_decompose


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dust", default="0.04,0.02,0.01,0.005")
    a = ap.parse_args(argv)
    p = NeckParams(k=1, delta=0.1, epsilon=0.12, nu=0.1, tau=0.15, r_min=2.0 ** -5, beta_threshold=0.3)
    print("dust_density,necks,total_neck_mass,max_ratio")
    for dd in (float(v) for v in a.dust.split(",")):
        m = mixed_measure(2, 1, dd)
        D = neck_decompose(m, p, 50.0)
        masses = [e.region.neck_mass(m) for e in D.necks]
        ratios = [mu / (dd * e.region.ball.radius ** p.k) for mu, e in zip(masses, D.necks)]
        print(f"{dd},{len(D.necks)},{sum(masses):.6f},{max(ratios):.4f}")


if __name__ == "__main__":
    main()
