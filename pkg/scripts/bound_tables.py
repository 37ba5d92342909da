#!/usr/bin/env python3
"""f_sigma curve, its small-delta coefficient, delta(eps) and the dimension window."""
import argparse
import math

import numpy as np

from kleinscat.bounds import asymptotic_coefficient, dimension_window, f_sigma, invert_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--D", type=float, default=1.0)
    args = ap.parse_args()

    lams = [1, 1.5, 2, 4, 8, 16, 64, 1e3]
    print("lambda " + " ".join(f"{l:>9g}" for l in lams))
    for s in args.sigma:
        print(f"s={s:<4g} " + " ".join(f"{f_sigma(s, l):>9.5f}" for l in lams))
    print()
    for s in args.sigma:
        print(f"sigma {s:g}: C = {asymptotic_coefficient(s):.8f} (pi/2 = {math.pi / 2:.8f})")
    print()
    print(f"{'eps':>7} {'delta':>10} {'delta/eps':>10} {'lower':>8} {'upper':>8}")
    for e in (0.2, 0.1, 0.05, 0.025, 0.01):
        d = invert_bound(1.0, e)
        w = dimension_window(1 + d, args.D)
        print(f"{e:>7g} {d:>10.6f} {d / e:>10.6f} {w.lower:>8.5f} {w.upper:>8.5f}")
    print(f"2/sqrt(pi) = {2 / np.sqrt(np.pi):.6f}")


if __name__ == "__main__":
    main()
