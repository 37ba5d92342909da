#!/usr/bin/env python3
"""Exponent of convergence against box-counting dimension as the circles shrink."""
import argparse

from kleinscat.kleinian import Circle, build_schottky
from kleinscat.limitset import box_dimension, orbital_growth, sample_limit_set


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radii", type=float, nargs="+", default=[1.0, 0.5, 0.2, 0.1, 0.05])
    ap.add_argument("--word-len", type=int, default=6)
    ap.add_argument("--R-max", type=float, default=40.0)
    args = ap.parse_args()

    print(f"{'r':>6} {'delta':>8} {'+-':>7} {'box':>8} {'+-':>7} {'points':>7}")
    for r in args.radii:
        G = build_schottky([(Circle(-3, r), Circle(3, r)), (Circle(-3j, r), Circle(3j, r))])
        fit = orbital_growth(G, args.R_max if r < 0.5 else min(args.R_max, 16.0))
        s = sample_limit_set(G, args.word_len)
        est = box_dimension(s, scales="resolved" if r < 0.5 else range(3, 11))
        print(f"{r:>6g} {fit.exponent:>8.4f} {fit.stderr:>7.4f} {est.dimension:>8.4f} {est.stderr:>7.4f} {len(s):>7}")


if __name__ == "__main__":
    main()
