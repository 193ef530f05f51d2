#!/usr/bin/env python3
"""beta_k(0, r)^2 of ambient dust against r, with the closed-form disk value."""

import argparse
import math

import numpy as np

from reifenberg.beta import beta_number, dyadic_scales
from reifenberg.covering import loglog_slope
from reifenberg.generators import dust_measure


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--density", type=float, default=0.1)
    ap.add_argument("--spacing", type=float, default=0.01)
    ap.add_argument("--rmax", type=float, default=1.0)
    ap.add_argument("--rmin", type=float, default=1 / 64)
    a = ap.parse_args(argv)
    m = dust_measure(2, a.density, a.spacing, 2.0)
    rs = dyadic_scales(a.rmax, a.rmin)
    b2 = np.array([beta_number(m, [0.0, 0.0], r, 1) ** 2 for r in rs])
    print("r,beta2,disk_value")
    for r, b in zip(rs, b2):
        print(f"{r:.6g},{b:.6g},{a.density * math.pi * r / 4:.6g}")
    print(f"# slope {loglog_slope(rs, b2):.4f}")


if __name__ == "__main__":
    main()
