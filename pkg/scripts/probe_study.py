#!/usr/bin/env python3
"""Symbol-level probe pairing against the scale a, with the f_sigma lower bound."""
import argparse
import math

from kleinscat import qc
from kleinscat.bounds import f_sigma
from kleinscat.moebius import MoebiusMap
from kleinscat.probes import probe_pairing


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=1.0)
    ap.add_argument("--a", type=float, nargs="+", default=[0.4, 0.2, 0.1, 0.05])
    args = ap.parse_args()

    maps = {
        "beltrami 1/3": qc.LinearBeltrami(1 / 3),
        "beltrami 0.2 o moebius": qc.Composite(
            (qc.LinearBeltrami(0.2), qc.MoebiusDiffeo(MoebiusMap(1, 0.3, 0.2, 1)))
        ),
        "radial K=2": qc.Composite((qc.MoebiusDiffeo(MoebiusMap(1, 0.5, 0, 1)), qc.RadialStretch(2.0))),
    }
    for name, psi in maps.items():
        for a in args.a:
            val = probe_pairing(psi, args.sigma, a)
            lam = qc.dilatation(psi, rect=(-a, a, -a, a), n=16)
            bound = f_sigma(args.sigma, min(lam.K_from_lambda, 1e6)) / (8 * math.pi)
            print(f"{name:>24} a={a:<5g} pairing {val:.6f}  sup-lambda bound {bound:.6f}")


if __name__ == "__main__":
    main()
