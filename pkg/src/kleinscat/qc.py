"""Quasiconformal distortion of explicit planar diffeomorphisms.

A diffeomorphism is one of a few closed-form families (or an ordered
composite of them).  Everything downstream is computed from the complex
Wirtinger derivatives ``(f_z, f_zbar)`` at a point, from which the real
Jacobian, the Beltrami coefficient and the distortion matrix follow.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DegenerateDerivativeError,
    SingularJacobianError,
    SingularPointError,
)
from .moebius import MoebiusMap, PoleError, apply_array

FD_STEP = 1e-6
ORIENTATION_PROBES = 64


class DiffeoField:
    """Base class.  Subclasses implement ``map`` and ``wirtinger``."""

    family = "abstract"
    analytic = True

    def map(self, z):
        raise NotImplementedError

    def wirtinger(self, z):
        """(f_z, f_zbar) at z; arrays broadcast."""
        raise NotImplementedError

    def __call__(self, z):
        return self.map(z)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def check_orientation(self, rect=(-1.0, 1.0, -1.0, 1.0), n: int = ORIENTATION_PROBES) -> None:
        """det Dpsi > 0 on an 8x8 probe lattice (``n`` points) inside ``rect``."""
        side = int(round(np.sqrt(n)))
        xmin, xmax, ymin, ymax = rect
        xs = xmin + (np.arange(side) + 0.5) * (xmax - xmin) / side
        ys = ymin + (np.arange(side) + 0.5) * (ymax - ymin) / side
        z = (xs[:, None] + 1j * ys[None, :]).ravel()
        # the radial family is singular only at 0
        z = z[np.abs(z) > 1e-12]
        fz, fzb = self.wirtinger(z)
        det = np.abs(fz) ** 2 - np.abs(fzb) ** 2
        if not np.all(det > 0):
            raise ConfigError(f"{self.family} map is not orientation preserving on {rect}")


@dataclass(frozen=True)
class Identity(DiffeoField):
    family = "identity"

    def map(self, z):
        return np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)

    def wirtinger(self, z):
        z = np.asarray(z, dtype=complex)
        return np.ones_like(z), np.zeros_like(z)

    def to_dict(self):
        return {"family": self.family}


@dataclass(frozen=True)
class LinearBeltrami(DiffeoField):
    """z -> z + mu * conj(z), constant Beltrami coefficient mu."""

    mu: complex = 0j
    family = "linear-beltrami"

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        if not abs(self.mu) < 1:
            raise ConfigError(f"|mu| must be < 1, got {abs(self.mu)}")

    def map(self, z):
        z = np.asarray(z, dtype=complex)
        out = z + self.mu * np.conj(z)
        return out if out.ndim else complex(out)

    def wirtinger(self, z):
        z = np.asarray(z, dtype=complex)
        return np.ones_like(z), np.full_like(z, self.mu)

    def to_dict(self):
        return {"family": self.family, "mu": [self.mu.real, self.mu.imag]}


@dataclass(frozen=True)
class RadialStretch(DiffeoField):
    """z -> z |z|^(K-1); K-quasiconformal, singular at 0 when K > 1."""

    K: float = 1.0
    family = "radial-stretch"

    def __post_init__(self):
        object.__setattr__(self, "K", float(self.K))
        if not self.K >= 1:
            raise ConfigError(f"radial stretch needs K >= 1, got {self.K}")

    def map(self, z):
        z = np.asarray(z, dtype=complex)
        out = z * np.abs(z) ** (self.K - 1)
        return out if out.ndim else complex(out)

    def wirtinger(self, z):
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        if self.K != 1 and np.any(r == 0):
            raise SingularPointError("radial stretch is not differentiable at 0")
        rk = r ** (self.K - 1)
        fz = 0.5 * (self.K + 1) * rk
        with np.errstate(invalid="ignore", divide="ignore"):
            phase = np.where(r > 0, z / np.where(r > 0, np.conj(z), 1), 1.0)
        fzb = 0.5 * (self.K - 1) * rk * phase
        return fz.astype(complex), fzb.astype(complex)

    def to_dict(self):
        return {"family": self.family, "K": self.K}


@dataclass(frozen=True)
class MoebiusDiffeo(DiffeoField):
    g: MoebiusMap = field(default_factory=MoebiusMap.identity)
    family = "moebius"

    def map(self, z):
        out = apply_array(self.g, z)
        return out if np.ndim(out) else complex(out)

    def wirtinger(self, z):
        z = np.asarray(z, dtype=complex)
        den = self.g.c * z + self.g.d
        if np.any(np.abs(den) < 1e-300):
            raise PoleError("point is the pole of the Moebius map")
        return 1.0 / (den * den), np.zeros_like(z)

    def to_dict(self):
        return {"family": self.family, "matrix": self.g.to_list()}


@dataclass(frozen=True)
class Composite(DiffeoField):
    """Ordered composite: ``parts[0]`` is applied first."""

    parts: tuple = ()
    family = "composite"

    @property
    def analytic(self):
        return all(p.analytic for p in self.parts)

    def map(self, z):
        out = z
        for p in self.parts:
            out = p.map(out)
        return out

    def wirtinger(self, z):
        if not self.analytic:
            return wirtinger_fd(self, z)
        # chain rule for Wirtinger derivatives of h o f:
        # (h o f)_z = h_w f_z + h_wbar conj(f_zbar), (h o f)_zbar = h_w f_zbar + h_wbar conj(f_z)
        z = np.asarray(z, dtype=complex)
        fz, fzb = np.ones_like(z), np.zeros_like(z)
        w = z
        for p in self.parts:
            hw, hwb = p.wirtinger(w)
            fz, fzb = hw * fz + hwb * np.conj(fzb), hw * fzb + hwb * np.conj(fz)
            w = p.map(w)
        return fz, fzb

    def to_dict(self):
        return {"family": self.family, "parts": [p.to_dict() for p in self.parts]}


def from_dict(d, rect=None) -> DiffeoField:
    """Parse the JSON form; a bare list is read as a composite.

    With ``rect`` given, orientation is checked on 64 probe points there.
    """
    psi = _parse(d)
    if rect is not None:
        psi.check_orientation(rect)
    return psi


def _parse(d) -> DiffeoField:
    if isinstance(d, list):
        return Composite(tuple(_parse(x) for x in d))
    fam = d.get("family")
    if fam == "identity":
        return Identity()
    if fam == "linear-beltrami":
        mu = d.get("mu", [0.0, 0.0])
        mu = complex(mu[0], mu[1]) if isinstance(mu, (list, tuple)) else complex(mu)
        return LinearBeltrami(mu)
    if fam == "radial-stretch":
        return RadialStretch(d["K"])
    if fam == "moebius":
        return MoebiusDiffeo(MoebiusMap.from_list(d["matrix"]))
    if fam == "composite":
        return Composite(tuple(_parse(x) for x in d["parts"]))
    raise ConfigError(f"unknown diffeomorphism family {fam!r}")


# --- pointwise quantities ---------------------------------------------------


def wirtinger_fd(psi: DiffeoField, z):
    """Central differences with step 1e-6 * max(1, |z|)."""
    z = np.asarray(z, dtype=complex)
    h = FD_STEP * np.maximum(1.0, np.abs(z))
    fx = (np.asarray(psi.map(z + h)) - np.asarray(psi.map(z - h))) / (2 * h)
    fy = (np.asarray(psi.map(z + 1j * h)) - np.asarray(psi.map(z - 1j * h))) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


def _to_real(fz, fzb):
    # f_x = f_z + f_zbar, f_y = i (f_z - f_zbar)
    fx = fz + fzb
    fy = 1j * (fz - fzb)
    J = np.empty(np.shape(fz) + (2, 2))
    J[..., 0, 0] = np.real(fx)
    J[..., 0, 1] = np.real(fy)
    J[..., 1, 0] = np.imag(fx)
    J[..., 1, 1] = np.imag(fy)
    return J


def jacobian(psi: DiffeoField, z) -> np.ndarray:
    """Real 2x2 Jacobian [[u_x, u_y], [v_x, v_y]] (stacked for array input)."""
    return _to_real(*psi.wirtinger(z))


def jacobian_fd(psi: DiffeoField, z) -> np.ndarray:
    return _to_real(*wirtinger_fd(psi, z))


def jacobian_det(psi: DiffeoField, z):
    fz, fzb = psi.wirtinger(z)
    return np.abs(fz) ** 2 - np.abs(fzb) ** 2


def beltrami(psi: DiffeoField, z):
    """mu = f_zbar / f_z from the real Jacobian's Wirtinger combinations."""
    J = jacobian(psi, z)
    ux, uy, vx, vy = J[..., 0, 0], J[..., 0, 1], J[..., 1, 0], J[..., 1, 1]
    fz = 0.5 * ((ux + vy) + 1j * (vx - uy))
    fzb = 0.5 * ((ux - vy) + 1j * (vx + uy))
    if np.any(np.abs(fz) < 1e-12):
        raise DegenerateDerivativeError("|f_z| < 1e-12; Beltrami coefficient undefined")
    mu = fzb / fz
    return mu if np.ndim(mu) else complex(mu)


def distortion_matrix(psi: DiffeoField, z) -> np.ndarray:
    """A(z) = sqrt(det Dpsi) * Dpsi^{-1}; det A = 1."""
    J = jacobian(psi, z)
    det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(~(det > 1e-300)):
        raise SingularJacobianError("Jacobian is singular or orientation reversing")
    inv = np.empty_like(J)
    inv[..., 0, 0] = J[..., 1, 1]
    inv[..., 0, 1] = -J[..., 0, 1]
    inv[..., 1, 0] = -J[..., 1, 0]
    inv[..., 1, 1] = J[..., 0, 0]
    return inv / np.sqrt(det)[..., None, None]


def lambda_max(psi: DiffeoField, z):
    """Larger eigenvalue of A^t A (the smaller one is its reciprocal)."""
    A = distortion_matrix(psi, z)
    AtA = np.swapaxes(A, -1, -2) @ A
    ev = np.linalg.eigvalsh(AtA)
    lam = ev[..., -1]
    return lam if np.ndim(lam) else float(lam)


def eigen_pair(psi: DiffeoField, z):
    A = distortion_matrix(psi, z)
    ev = np.linalg.eigvalsh(np.swapaxes(A, -1, -2) @ A)
    return ev[..., -1], ev[..., 0]


# --- grid reports ------------------------------------------------------------


@dataclass
class DistortionReport:
    K_from_lambda: float
    K_from_beltrami: float
    sup_location: complex
    grid: dict
    failures: int = 0

    def to_dict(self) -> dict:
        return {
            "K_from_lambda": self.K_from_lambda,
            "K_from_beltrami": self.K_from_beltrami,
            "sup_location": [self.sup_location.real, self.sup_location.imag],
            "grid": self.grid,
            "failures": self.failures,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def rect_grid(rect, n: int = 256) -> np.ndarray:
    """Cell-centred n x n lattice over rect, row-major in y then x."""
    xmin, xmax, ymin, ymax = rect
    xs = xmin + (np.arange(n) + 0.5) * (xmax - xmin) / n
    ys = ymin + (np.arange(n) + 0.5) * (ymax - ymin) / n
    return (xs[None, :] + 1j * ys[:, None]).ravel()


def dilatation(psi: DiffeoField, points=None, rect=(-1.0, 1.0, -1.0, 1.0), n: int = 256) -> DistortionReport:
    """Sup of lambda over the grid and (1+m)/(1-m) from the sup of |mu|.

    Points where the map is singular are skipped and counted in ``failures``.
    """
    if points is None:
        points = rect_grid(rect, n)
        grid = {"rect": list(rect), "n": n}
    else:
        points = np.asarray(points, dtype=complex).ravel()
        grid = {"points": int(points.size)}
    if points.size == 0:
        raise ValueError("empty grid")
    lam = np.full(points.size, np.nan)
    mu = np.full(points.size, np.nan)
    failures = 0
    # vectorized pass, falling back to pointwise when some point fails
    try:
        lam = np.asarray(lambda_max(psi, points), dtype=float)
        mu = np.abs(beltrami(psi, points))
    except (SingularPointError, SingularJacobianError, DegenerateDerivativeError, PoleError):
        for i, z in enumerate(points):
            try:
                lam[i] = lambda_max(psi, z)
                mu[i] = abs(beltrami(psi, z))
            except (SingularPointError, SingularJacobianError, DegenerateDerivativeError, PoleError):
                failures += 1
    ok = np.isfinite(lam) & np.isfinite(mu)
    if not np.any(ok):
        raise SingularPointError("every grid point failed")
    i = int(np.nanargmax(np.where(ok, lam, -np.inf)))
    m = float(np.max(mu[ok]))
    return DistortionReport(
        K_from_lambda=float(lam[i]),
        K_from_beltrami=(1 + m) / (1 - m),
        sup_location=complex(points[i]),
        grid=grid,
        failures=failures,
    )
