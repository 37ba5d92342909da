#!/usr/bin/env python3
"""Relative scattering norm against the Beltrami coefficient, with a refinement study.

    python3 scripts/srel_sweep.py --grids 16 32 48 --mu 0 0.05 0.1 0.15 0.2
"""
import argparse
import time

from kleinscat import qc
from kleinscat.kleinian import Circle, build_schottky
from kleinscat.moebius import MoebiusMap
from kleinscat.scattering import operator_norm, relative_scattering


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[32])
    ap.add_argument("--mu", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.15, 0.2])
    ap.add_argument("--s", type=float, default=3.0)
    ap.add_argument("--max-len", type=int, default=12)
    ap.add_argument("--rank", type=int, choices=(1, 2), default=1)
    args = ap.parse_args()

    pairs = [(Circle(-3, 1), Circle(3, 1))]
    if args.rank == 2:
        pairs.append((Circle(-3j, 1), Circle(3j, 1)))
    G = build_schottky(pairs, rect=(-1, 1, -1, 1))

    print(f"{'n':>4} {'psi':>14} {'K':>8} {'||S_rel||':>14} {'||S_1||':>14} {'sec':>6}")
    for n in args.grids:
        cases = [("moebius", qc.MoebiusDiffeo(MoebiusMap(1, 0.1, 0.05, 1)))]
        cases += [(f"mu={m:g}", qc.LinearBeltrami(m) if m else qc.Identity()) for m in args.mu]
        for name, psi in cases:
            t0 = time.perf_counter()
            run = relative_scattering(G, psi, args.s, n_side=n, max_len=args.max_len)
            K = qc.dilatation(psi, n=64).K_from_lambda
            print(f"{n:>4} {name:>14} {K:>8.4f} {run.norm:>14.6e} {operator_norm(run.S1):>14.6e} "
                  f"{time.perf_counter() - t0:>6.1f}")


if __name__ == "__main__":
    main()
