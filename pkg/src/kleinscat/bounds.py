"""The symbol integral f_sigma, its inversion, and dimension-distortion windows.

    f_sigma(lam) = int_0^{2 pi} [1 - cos(sigma ln(lam cos^2 t + sin^2 t / lam))] dt

vanishes at lam = 1, grows like C sigma^2 (lam - 1)^2 with C = pi/2, and
stays below 4 pi.  It is increasing on the range that matters for the
quasiconformal bound but not for all lam: once sigma ln lam passes about
pi the integrand starts to wrap around, so inversion always brackets the
first crossing from below.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import FitInstabilityError, OutOfRangeError

QUAD_TOL = 1e-10
BISECT_TOL = 1e-10
LAMBDA_CEILING = 1e6
FIT_DELTAS = (1e-3, 2e-3, 4e-3)


def f_sigma(sigma: float, lam: float) -> float:
    """Adaptive Gauss-Kronrod quadrature over [0, 2 pi]; lam > 0 is allowed."""
    sigma, lam = float(sigma), float(lam)
    if sigma == 0:
        raise ValueError("sigma must be nonzero")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if lam == 1.0:
        return 0.0
    inv = 1.0 / lam

    def integrand(t):
        c = math.cos(t)
        q = lam * c * c + inv * (1.0 - c * c)
        return 1.0 - math.cos(sigma * math.log(q))

    # split at the quarter periods where the integrand peaks or dips
    pts = [0.5 * math.pi * k for k in range(5)]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=QUAD_TOL / 4, epsrel=1e-13, limit=200)
        total += val
    return float(min(max(total, 0.0), 4 * math.pi))


@dataclass
class FsigmaCurve:
    sigma: float
    lambdas: np.ndarray
    values: np.ndarray
    quadrature: dict = field(default_factory=lambda: {"rule": "adaptive Gauss-Kronrod", "epsabs": QUAD_TOL})

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def rows(self):
        return list(zip(self.lambdas.tolist(), self.values.tolist()))


def fsigma_curve(sigma: float, lambdas) -> FsigmaCurve:
    lam = np.asarray(lambdas, dtype=float)
    return FsigmaCurve(float(sigma), lam, np.array([f_sigma(sigma, x) for x in lam]))


def asymptotic_coefficient(sigma: float, deltas=FIT_DELTAS) -> float:
    """C in f_sigma(1 + d) = C sigma^2 d^2 + O(d^3).

    Fits f/d^2 = C sigma^2 + b d by least squares and returns the intercept
    over sigma^2.  Raises FitInstabilityError when the linear model misses
    any point by more than 1 %.
    """
    d = np.asarray(deltas, dtype=float)
    y = np.array([f_sigma(sigma, 1 + x) for x in d]) / d**2
    X = np.stack([np.ones_like(d), d], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = np.max(np.abs(X @ coef - y) / np.abs(y))
    if resid > 0.01:
        raise FitInstabilityError(f"quadratic model misses the data by {resid:.3%}")
    return float(coef[0] / sigma**2)


def invert_fsigma(sigma: float, target: float, tol: float = BISECT_TOL) -> float:
    """Smallest d >= 0 with f_sigma(1 + d) = target, by doubling then bisection."""
    if target < 0:
        raise ValueError("target must be nonnegative")
    if target == 0:
        return 0.0
    hi = 1e-6
    ceiling = 0.0
    while True:
        val = f_sigma(sigma, 1 + hi)
        ceiling = max(ceiling, val)
        if val >= target:
            break
        if 1 + hi >= LAMBDA_CEILING:
            raise OutOfRangeError(
                f"f_sigma never reaches {target:.6g} on [1, {LAMBDA_CEILING:g}] (ceiling {ceiling:.6g})",
                ceiling=ceiling,
            )
        hi = min(2 * hi, LAMBDA_CEILING - 1)
    lo = 0.0 if hi <= 1e-6 else hi / 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f_sigma(sigma, 1 + mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def invert_bound(sigma: float, eps: float, tol: float = BISECT_TOL) -> float:
    """delta(eps) under the calibration f_sigma(1 + delta) = 2 sigma^2 eps^2."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return invert_fsigma(sigma, 2 * sigma**2 * eps**2, tol)


def K_of_eps(sigma: float, eps: float) -> float:
    return 1.0 + invert_bound(sigma, eps)


@dataclass
class DistortionWindow:
    K: float
    D: float
    lower: float
    upper: float

    def to_dict(self) -> dict:
        return {"K": self.K, "D": self.D, "lower": self.lower, "upper": self.upper}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def dimension_window(K: float, D: float) -> DistortionWindow:
    """Bounds on the dimension of the image of a set of dimension D under a K-qc map."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if not 0 <= D <= 2:
        raise ValueError("D must lie in [0, 2]")
    lower = 2 * D / (2 * K + (K - 1) * D)
    upper = 2 * K * D / (2 + (K - 1) * D)
    return DistortionWindow(float(K), float(D), float(lower), float(upper))


def nu_of_eps(sigma: float, eps: float, D: float) -> float:
    w = dimension_window(K_of_eps(sigma, eps), D)
    return max(w.upper - D, D - w.lower)


def write_curve_csv(curve: FsigmaCurve, path, header_extra=None) -> None:
    with open(path, "w", newline="") as fh:
        if header_extra:
            for line in header_extra:
                fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["lambda", "f_sigma"])
        for lam, val in curve.rows():
            w.writerow([f"{lam:.17g}", f"{val:.17g}"])


__all__ = [
    "f_sigma",
    "FsigmaCurve",
    "fsigma_curve",
    "asymptotic_coefficient",
    "invert_fsigma",
    "invert_bound",
    "K_of_eps",
    "DistortionWindow",
    "dimension_window",
    "nu_of_eps",
    "write_curve_csv",
]
