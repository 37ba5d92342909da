"""Limit-set samples, box-counting dimension and orbital-growth exponent."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateRangeError
from .kleinian import (
    SchottkyGroup,
    displacements,
    min_length_for_radius,
    orbital_counts,
    word_ball,
)

DEDUP_RES = 1e-12
MIN_POINTS = 100
DEFAULT_SCALES = tuple(range(3, 11))


@dataclass
class LimitSample:
    points: np.ndarray
    word_len: int
    # elementary groups have a finite limit set, known exactly
    finite: bool = False
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["re", "im"])
            for z in self.points:
                w.writerow([repr(float(z.real)), repr(float(z.imag))])


@dataclass
class DimensionEstimate:
    dimension: float
    stderr: float
    scales: list
    counts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "stderr": self.stderr,
            "scales": list(self.scales),
            "counts": list(self.counts),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _dedup(z: np.ndarray, res: float = DEDUP_RES) -> np.ndarray:
    key = np.round(np.stack([z.real, z.imag], axis=1) / res).astype(np.int64)
    _, idx = np.unique(key, axis=0, return_index=True)
    return z[np.sort(idx)]


def attracting_fixed_points(mats: np.ndarray) -> np.ndarray:
    """Attracting fixed point of each loxodromic matrix in a (n, 2, 2) stack."""
    a, b, c, d = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    out = np.empty(len(mats), dtype=complex)
    fin = np.abs(c) > 1e-300
    disc = np.sqrt((a - d) ** 2 + 4 * b * c)
    with np.errstate(divide="ignore", invalid="ignore"):
        z1 = (a - d + disc) / (2 * c)
        z2 = (a - d - disc) / (2 * c)
        # attracting iff |c z + d| > 1
        pick1 = np.abs(c * z1 + d) > np.abs(c * z2 + d)
        out[fin] = np.where(pick1, z1, z2)[fin]
        lin = ~fin
        if np.any(lin):
            finite = b[lin] / (d[lin] - a[lin])
            attr = np.abs(a[lin] / d[lin]) < 1
            out[lin] = np.where(attr, finite, np.inf)
    return out


def sample_limit_set(G: SchottkyGroup, word_len: int) -> LimitSample:
    """Attracting fixed points of all reduced words of length exactly word_len."""
    if word_len < 1:
        raise ValueError("word_len must be >= 1")
    if G.rank == 0:
        return LimitSample(np.zeros(0, dtype=complex), word_len, finite=True)
    ball = word_ball(G, word_len)
    mats = ball.mats[ball.lengths == word_len]
    pts = attracting_fixed_points(mats)
    pts = _dedup(pts[np.isfinite(pts)])
    return LimitSample(pts, word_len, finite=G.rank == 1, params={"rank": G.rank})


def _diameter(z: np.ndarray) -> float:
    xy = np.stack([z.real, z.imag], axis=1)
    try:
        hull = xy[ConvexHull(xy).vertices]
    except (QhullError, ValueError):
        # collinear: extreme points along the principal direction suffice
        centered = xy - xy.mean(axis=0)
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        proj = centered @ vt[0]
        return float(proj.max() - proj.min())
    diff = hull[:, None, :] - hull[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def box_counts(z: np.ndarray, sizes) -> np.ndarray:
    """Occupied boxes of a grid anchored at the origin, one count per size."""
    out = []
    for s in sizes:
        ij = np.floor(np.stack([z.real, z.imag], axis=1) / s).astype(np.int64)
        out.append(len(np.unique(ij, axis=0)))
    return np.asarray(out)


def box_dimension(sample, scales=DEFAULT_SCALES) -> DimensionEstimate:
    """Least-squares slope of log N(boxes) against log(1/size).

    Box sizes are ``diam * 2**-k`` for k in ``scales``.  ``scales="resolved"``
    runs k from 3 down to the finest octave still 20x above the dedup
    resolution, which thin limit sets (small circles) need.  A LimitSample of
    an elementary group is a finite set and gets dimension 0 exactly.
    """
    if isinstance(sample, LimitSample):
        if sample.finite:
            return DimensionEstimate(0.0, 0.0, [], [len(sample)])
        z = np.asarray(sample.points, dtype=complex)
    else:
        z = np.asarray(sample, dtype=complex).ravel()
    z = _dedup(z)
    if len(z) < MIN_POINTS:
        raise DegenerateRangeError(
            f"{len(z)} distinct points cannot resolve the dyadic range; need >= {MIN_POINTS}"
        )
    diam = _diameter(z)
    if not diam > 0:
        raise DegenerateRangeError("point set has zero diameter")
    if isinstance(scales, str):
        if scales != "resolved":
            raise ValueError(f"unknown scale rule {scales!r}")
        kmax = int(np.floor(np.log2(diam / (20 * DEDUP_RES))))
        scales = range(3, kmax + 1)
    if len(scales) < 5:
        raise ValueError("fit needs at least 5 dyadic scales")
    sizes = diam * 2.0 ** (-np.asarray(scales, dtype=float))
    counts = box_counts(z, sizes)
    if len(np.unique(counts)) < 3:
        raise DegenerateRangeError("box counts vary over fewer than 3 dyadic scales")
    fit = stats.linregress(np.log(1.0 / sizes), np.log(counts))
    value = float(np.clip(fit.slope, 0.0, 2.0))
    return DimensionEstimate(value, float(fit.stderr), [float(s) for s in sizes], counts.tolist())


@dataclass
class GrowthFit:
    exponent: float
    stderr: float
    radii: np.ndarray
    counts: np.ndarray
    max_len: int


def orbital_growth(G: SchottkyGroup, R_max: float, max_len: int | None = None, n_radii: int = 33) -> GrowthFit:
    """Slope of log N(R) against R over the window [R_max/2, R_max]."""
    if max_len is None:
        max_len = min_length_for_radius(G, R_max)
    radii = np.linspace(0.5 * R_max, R_max, n_radii)
    counts = orbital_counts(G, radii, max_len)
    fit = stats.linregress(radii, np.log(counts))
    return GrowthFit(
        float(np.clip(fit.slope, 0.0, 2.0)), float(fit.stderr), radii, counts, max_len
    )


def exponent_of_convergence(G: SchottkyGroup, R_max: float, max_len: int | None = None) -> float:
    return orbital_growth(G, R_max, max_len).exponent


def limit_set_contained(G: SchottkyGroup, sample: LimitSample) -> bool:
    if not G.has_circles:
        return True
    z = sample.points
    inside = np.zeros(len(z), dtype=bool)
    for c in G.circles:
        inside |= np.abs(z - c.center) <= c.radius * (1 + 1e-12)
    return bool(np.all(inside))


__all__ = [
    "LimitSample",
    "DimensionEstimate",
    "GrowthFit",
    "sample_limit_set",
    "box_dimension",
    "box_counts",
    "orbital_growth",
    "exponent_of_convergence",
    "limit_set_contained",
    "displacements",
]
