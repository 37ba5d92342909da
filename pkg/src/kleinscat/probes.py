"""Probe states localized at the origin and the principal-symbol pairing.

The lower bound on ||S_rel|| tests the operator B = 2 sigma^2 S_rel^* S_rel
against a step state phi_1 and a Gaussian phi_2 of width a around x = 0.  At
the symbol level, with unit-norm probes and the Fourier convention
f(x) = (2 pi)^-2 int fhat(xi) e^{i x.xi} dxi, the real part of the pairing
is

    (1 / 2 pi^2) int_{|u|<1} int_{|eta|=1} b0(a u, eta) R(u . eta) deta du,

    R(t) = int_0^inf r cos(r t) exp(-r^2/2) dr,

after scaling x = a u, r = rho / a.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from . import qc
from .errors import DomainError
from .kleinian import SchottkyGroup
from .scattering import FormGrid

R_TOL = 1e-10
N_ETA = 256
N_R = 128
R_CUT = 12.0
N_RAD = 32
N_ANG = 64


def r_integral(t: float) -> float:
    """int_0^inf r cos(r t) exp(-r^2/2) dr by adaptive quadrature."""
    t = float(t)
    if abs(t) > 1:
        raise ValueError("t must lie in [-1, 1]")
    val, _ = integrate.quad(
        lambda r: r * np.cos(r * t) * np.exp(-0.5 * r * r), 0.0, np.inf, epsabs=R_TOL, limit=200
    )
    return float(val)


def symbol_b0(psi: qc.DiffeoField, sigma: float, z, xi) -> np.ndarray:
    """1 - cos(sigma ln |A(z) xi|^2 / |xi|^2); xi is a unit 2-vector or angle array."""
    A = qc.distortion_matrix(psi, z)
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0 or (xi.shape and xi.shape[-1] != 2):
        xi = np.stack([np.cos(xi), np.sin(xi)], axis=-1)
    n2 = np.sum(xi * xi, axis=-1)
    if np.any(np.abs(n2 - 1) > 1e-9):
        raise ValueError("xi must be a unit vector")
    Axi = np.einsum("...ij,...j->...i", A, xi)
    ratio = np.sum(Axi * Axi, axis=-1) / n2
    out = 1.0 - np.cos(sigma * np.log(ratio))
    return out if np.ndim(out) else float(out)


def boundary_distance(G: SchottkyGroup, z) -> np.ndarray:
    """Euclidean distance from points of D to the boundary of D (circles and rectangle)."""
    z = np.asarray(z, dtype=complex)
    d = np.full(z.shape, np.inf)
    if G.has_circles:
        for c in G.circles:
            d = np.minimum(d, np.abs(z - c.center) - c.radius)
    if G.rect is not None:
        xmin, xmax, ymin, ymax = G.rect
        d = np.minimum.reduce([d, z.real - xmin, xmax - z.real, z.imag - ymin, ymax - z.imag])
    return d


def check_disk(G: SchottkyGroup, a: float) -> None:
    if not a > 0:
        raise ValueError("probe scale a must be positive")
    room = float(boundary_distance(G, np.array([0j]))[0])
    if a > room:
        raise DomainError(f"disk |x| < {a} leaves the fundamental domain (room {room:.6g})")


def _smootherstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6 * t - 15) + 10)


@dataclass
class ProbeState:
    kind: str
    a: float
    grid: FormGrid

    @property
    def values(self) -> np.ndarray:
        return self.grid.values

    def norm(self) -> float:
        return self.grid.norm(self.grid.values)


def probe_state(G: SchottkyGroup, grid: FormGrid, kind: str, a: float) -> ProbeState:
    """Step or Gaussian probe at the origin, normalized in the grid inner product.

    The Gaussian is multiplied by a C^2 bump that rises from 0 on the boundary
    of D to 1 at distance a/4.
    """
    check_disk(G, a)
    r = np.abs(grid.nodes)
    if kind == "step":
        f = (r < a).astype(float)
    elif kind == "gaussian":
        cut = _smootherstep(boundary_distance(G, grid.nodes) / (0.25 * a))
        f = np.exp(-0.5 * (r / a) ** 2) * cut
    else:
        raise ValueError(f"unknown probe kind {kind!r}")
    nrm = grid.norm(f)
    if nrm == 0:
        raise DomainError(f"no grid node lies in the support of the {kind} probe at a = {a}")
    return ProbeState(kind, float(a), replace(grid, values=(f / nrm).astype(complex)))


def _disk_rule(n_rad: int, n_ang: int):
    t, w = np.polynomial.legendre.leggauss(n_rad)
    rho = 0.5 * (t + 1)
    wr = 0.5 * w * rho
    ang = 2 * np.pi * np.arange(n_ang) / n_ang
    u = (rho[:, None] * np.exp(1j * ang)[None, :]).ravel()
    wu = (wr[:, None] * np.full(n_ang, 2 * np.pi / n_ang)[None, :]).ravel()
    return u, wu


def probe_pairing(
    psi: qc.DiffeoField,
    sigma: float,
    a: float,
    G: SchottkyGroup | None = None,
    n_eta: int = N_ETA,
    n_r: int = N_R,
    n_rad: int = N_RAD,
    n_ang: int = N_ANG,
) -> float:
    """Re <phi_1, B0 phi_2> through the (x, r, eta) factorization.

    eta: trapezoid rule on the circle; r: Gauss-Legendre on [0, 12/a]
    (equivalently rho in [0, 12]); x: Gauss-Legendre in radius times
    trapezoid in angle over the disk |x| < a.
    """
    if G is not None:
        check_disk(G, a)
    elif not a > 0:
        raise ValueError("probe scale a must be positive")
    u, wu = _disk_rule(n_rad, n_ang)
    eta_ang = 2 * np.pi * np.arange(n_eta) / n_eta
    eta = np.stack([np.cos(eta_ang), np.sin(eta_ang)], axis=-1)
    t, w = np.polynomial.legendre.leggauss(n_r)
    rho = 0.5 * R_CUT * (t + 1)
    wrho = 0.5 * R_CUT * w * rho * np.exp(-0.5 * rho * rho)
    A = qc.distortion_matrix(psi, a * u)
    total = 0.0
    chunk = 64
    for k in range(0, len(u), chunk):
        sl = slice(k, k + chunk)
        Aeta = np.einsum("xij,ej->xei", A[sl], eta)
        b0 = 1.0 - np.cos(sigma * np.log(np.sum(Aeta * Aeta, axis=-1)))
        proj = u[sl].real[:, None] * eta[None, :, 0] + u[sl].imag[:, None] * eta[None, :, 1]
        R = np.cos(proj[..., None] * rho) @ wrho
        total += float(np.sum(wu[sl, None] * b0 * R)) * (2 * np.pi / n_eta)
    return total / (2 * np.pi**2)


def disk_r_mass() -> float:
    """int_{|u|<1} R(u . eta) du, independent of eta: int_{-1}^{1} 2 sqrt(1-t^2) R(t) dt."""
    val, _ = integrate.quad(lambda t: 2 * np.sqrt(1 - t * t) * r_integral(t), -1, 1, epsabs=1e-10)
    return float(val)


__all__ = [
    "r_integral",
    "symbol_b0",
    "boundary_distance",
    "check_disk",
    "ProbeState",
    "probe_state",
    "probe_pairing",
    "disk_r_mass",
]
