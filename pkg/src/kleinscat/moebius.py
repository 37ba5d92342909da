"""Moebius transformations of the extended complex plane.

Points of the Riemann sphere are plain Python complex numbers, or the
singleton ``INF`` for the point at infinity.  Maps are stored as normalized
SL(2, C) matrices with a canonical sign.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from .errors import PoleError

DET_TOL = 1e-12
PARABOLIC_TOL = 1e-9
POLE_TOL = 1e-300


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
ExtendedPoint = Union[complex, _Infinity]


def is_inf(z) -> bool:
    return z is INF


class MapClass(str, Enum):
    IDENTITY = "identity"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    LOXODROMIC = "loxodromic"


def _canonical_sign(entries):
    # first nonzero entry gets Re > 0, or Re == 0 and Im > 0
    for e in entries:
        if e != 0:
            if e.real < 0 or (e.real == 0 and e.imag < 0):
                return -1
            return 1
    return 1


@dataclass(frozen=True)
class MoebiusMap:
    """z -> (a z + b) / (c z + d), normalized so that ad - bc = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(x) for x in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        # products of long words have entries ~1e8 and det = 1 only up to
        # cancellation error; rescaling by that noisy det would corrupt them
        noise = 64 * 2.0**-52 * (abs(a * d) + abs(b * c))
        if abs(det - 1) <= max(noise, 1e-15):
            pass
        elif det == 0 or abs(det) <= noise:
            raise ValueError("singular matrix does not define a Moebius map")
        else:
            r = cmath.sqrt(det)
            a, b, c, d = a / r, b / r, c / r, d / r
        sgn = _canonical_sign((a, b, c, d))
        if sgn < 0:
            a, b, c, d = -a, -b, -c, -d
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v)

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_matrix(cls, m) -> "MoebiusMap":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def from_list(cls, vals) -> "MoebiusMap":
        """Inverse of :meth:`to_list` (eight reals, row-major)."""
        if len(vals) != 8:
            raise ValueError("expected eight reals (a, b, c, d as re/im pairs)")
        z = [complex(vals[2 * k], vals[2 * k + 1]) for k in range(4)]
        return cls(*z)

    def to_list(self) -> list[float]:
        out = []
        for v in (self.a, self.b, self.c, self.d):
            out.extend([v.real, v.imag])
        return out

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def __call__(self, z):
        return apply(self, z)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)

    def close_to(self, other: "MoebiusMap", tol: float = 1e-9) -> bool:
        """Equality as maps, i.e. up to the sign of the matrix."""
        m1, m2 = self.matrix, other.matrix
        return bool(np.max(np.abs(m1 - m2)) <= tol or np.max(np.abs(m1 + m2)) <= tol)


def apply(g: MoebiusMap, z: ExtendedPoint) -> ExtendedPoint:
    if z is INF:
        if g.c == 0:
            return INF
        return g.a / g.c
    z = complex(z)
    den = g.c * z + g.d
    if den == 0:
        return INF
    return (g.a * z + g.b) / den


def apply_array(g: MoebiusMap, z: np.ndarray) -> np.ndarray:
    """Vectorized action on finite points; poles come back as complex inf."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        return (g.a * z + g.b) / (g.c * z + g.d)


def derivative(g: MoebiusMap, z: complex) -> complex:
    """Complex derivative g'(z) = 1/(cz+d)^2."""
    den = g.c * complex(z) + g.d
    if abs(den) < POLE_TOL:
        raise PoleError(f"{z!r} is the pole of the map")
    return 1.0 / (den * den)


def conformal_dilation(g: MoebiusMap, z: ExtendedPoint) -> float:
    """|g'(z)| = 1/|cz+d|^2 at a finite point."""
    if z is INF:
        raise PoleError("conformal dilation is only defined at finite points")
    den = abs(g.c * complex(z) + g.d)
    if den < POLE_TOL:
        raise PoleError(f"{z!r} is the pole of the map")
    return 1.0 / (den * den)


def conformal_dilation_array(g: MoebiusMap, z: np.ndarray) -> np.ndarray:
    den = np.abs(g.c * np.asarray(z, dtype=complex) + g.d)
    return 1.0 / (den * den)


def compose(g: MoebiusMap, h: MoebiusMap) -> MoebiusMap:
    """g o h."""
    return MoebiusMap(
        g.a * h.a + g.b * h.c,
        g.a * h.b + g.b * h.d,
        g.c * h.a + g.d * h.c,
        g.c * h.b + g.d * h.d,
    )


def inverse(g: MoebiusMap) -> MoebiusMap:
    return MoebiusMap(g.d, -g.b, -g.c, g.a)


def classify(g: MoebiusMap) -> MapClass:
    m = g.matrix
    if np.max(np.abs(m - np.eye(2))) <= PARABOLIC_TOL or np.max(np.abs(m + np.eye(2))) <= PARABOLIC_TOL:
        return MapClass.IDENTITY
    tr = g.trace
    if abs(tr * tr - 4) <= PARABOLIC_TOL:
        return MapClass.PARABOLIC
    if abs(tr.imag) <= PARABOLIC_TOL and abs(tr.real) < 2:
        return MapClass.ELLIPTIC
    return MapClass.LOXODROMIC


def base_displacement(g: MoebiusMap) -> float:
    """Hyperbolic distance from j = (0, 0, 1) to its image g(j) in upper half-space.

    Uses cosh(rho) = (|a|^2 + |b|^2 + |c|^2 + |d|^2) / 2.
    """
    half_frob = 0.5 * (abs(g.a) ** 2 + abs(g.b) ** 2 + abs(g.c) ** 2 + abs(g.d) ** 2)
    return math.acosh(max(1.0, half_frob))


def fixed_points(g: MoebiusMap) -> tuple[ExtendedPoint, ExtendedPoint]:
    """The two fixed points, attracting one first for loxodromic maps."""
    a, b, c, d = g.a, g.b, g.c, g.d
    if c == 0:
        if a == d:
            return INF, INF
        finite = b / (d - a)
        # multiplier at the finite point is a/d
        if abs(a / d) < 1:
            return finite, INF
        return INF, finite
    disc = cmath.sqrt((a - d) ** 2 + 4 * b * c)
    z1 = (a - d + disc) / (2 * c)
    z2 = (a - d - disc) / (2 * c)
    if abs(c * z1 + d) > abs(c * z2 + d):
        return z1, z2
    return z2, z1


def attracting_fixed_point(g: MoebiusMap) -> ExtendedPoint:
    return fixed_points(g)[0]
