"""Truncated scattering kernels and their discretized operators.

The kernel of a Schottky group G at spectral parameter s is the Poincare-type
series

    S(s; x, y) = sum_w |w'(x)|^s / |w(x) - y|^(2s)

over reduced words w, which converges for Re s > 2.  Only that regime is
summed here.  On a quadrature grid the operator becomes a dense matrix
M[i, j] ~ S(s; x_i, x_j) w_j.  The identity term 1/|x - y|^(2s) is
hypersingular on the diagonal; its diagonal entry is the Hadamard finite
part of the integral over the node's cell (the analytic continuation in s),
and every other term is evaluated pointwise.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import qc
from .errors import (
    ConfigError,
    ConvergenceError,
    DiagonalSingularityError,
    NodeMismatchError,
    RegimeError,
)
from .kleinian import (
    Circle,
    GroupIsomorphism,
    SchottkyGroup,
    WordBall,
    build_schottky,
    conjugate_group,
    in_fundamental_domain_array,
    invert_word,
    pruned_word_ball,
    reduce_word,
    word_ball,
    word_map,
)

DEFAULT_S = 3.0
DEFAULT_GRID = 32
DEFAULT_MAX_LEN = 12
DEFAULT_PRUNE_TOL = 1e-15
NORM_RTOL = 1e-8
NORM_MAXITER = 10_000
_GL_NODES = 32


@dataclass(frozen=True)
class SpectralParam:
    s: complex

    def __post_init__(self):
        object.__setattr__(self, "s", complex(self.s))

    @property
    def sigma(self) -> float:
        return self.s.imag

    @property
    def regime(self) -> str:
        if self.s.real > 2:
            return "convergent"
        if abs(self.s.real - 1) <= 1e-12 and self.s != 1:
            return "critical"
        return "other"

    def require_convergent(self) -> "SpectralParam":
        if self.regime != "convergent":
            raise RegimeError(
                f"the kernel series is only summed for Re s > 2 (got s = {self.s}); "
                "use symbol-level tools on the critical line"
            )
        return self


def as_param(s) -> SpectralParam:
    return s if isinstance(s, SpectralParam) else SpectralParam(s)


# --- grids ---------------------------------------------------------------------


@dataclass
class FormGrid:
    """Quadrature nodes, weights and cell frames over a fundamental domain.

    Node i owns the cell ``nodes[i] + frames[i] @ [-1/2, 1/2]^2`` (a square for
    tensor grids, a parallelogram after a push-forward); ``weights[i]`` is its
    area.  ``values`` optionally holds samples of a form of weight ``s``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    frames: np.ndarray
    s: complex = DEFAULT_S
    values: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.nodes)

    def with_values(self, values) -> "FormGrid":
        return replace(self, values=np.asarray(values, dtype=complex))

    def inner(self, f, g) -> complex:
        """<f, g> = sum_i w_i conj(f_i) g_i."""
        return complex(np.sum(self.weights * np.conj(f) * g))

    def norm(self, f) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(f) ** 2)))

    def to_dict(self) -> dict:
        return {
            "nodes": [[float(z.real), float(z.imag)] for z in self.nodes],
            "weights": [float(w) for w in self.weights],
            "meta": self.meta,
        }


def tensor_grid(G: SchottkyGroup, n_side: int = DEFAULT_GRID, rect=None) -> FormGrid:
    """Cell-centred n_side x n_side midpoint grid on the rectangle, clipped to D."""
    rect = rect if rect is not None else G.rect
    if rect is None:
        raise ConfigError("a reference rectangle is needed to build a grid")
    xmin, xmax, ymin, ymax = rect
    hx = (xmax - xmin) / n_side
    hy = (ymax - ymin) / n_side
    xs = xmin + (np.arange(n_side) + 0.5) * hx
    ys = ymin + (np.arange(n_side) + 0.5) * hy
    nodes = (xs[None, :] + 1j * ys[:, None]).ravel()
    keep = in_fundamental_domain_array(replace(G, rect=tuple(rect)), nodes)
    nodes = nodes[keep]
    n = len(nodes)
    frames = np.broadcast_to(np.diag([hx, hy]), (n, 2, 2)).copy()
    return FormGrid(
        nodes,
        np.full(n, hx * hy),
        frames,
        meta={"rect": [float(v) for v in rect], "n_side": n_side, "clipped": int(keep.size - n)},
    )


def pushforward_grid(psi: qc.DiffeoField, grid: FormGrid) -> FormGrid:
    """Nodes psi(x_i), weights det Dpsi(x_i) w_i, frames Dpsi(x_i) F_i."""
    J = qc.jacobian(psi, grid.nodes)
    det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    return FormGrid(
        np.asarray(psi.map(grid.nodes), dtype=complex),
        det * grid.weights,
        J @ grid.frames,
        s=grid.s,
        meta={**grid.meta, "pushforward": psi.to_dict()},
    )


# --- kernel series ---------------------------------------------------------------


def _pow_neg(r2: np.ndarray, s: complex) -> np.ndarray:
    """r2 ** (-s) for r2 > 0, with an integer fast path."""
    if s.imag == 0 and float(s.real).is_integer() and 0 < s.real <= 8:
        k = int(s.real)
        out = 1.0 / r2
        acc = out
        for _ in range(k - 1):
            acc = acc * out
        return acc
    if s.imag == 0:
        return np.power(r2, -s.real)
    return np.exp(-s * np.log(r2))


def _term_sum(mats: np.ndarray, x: np.ndarray, y: np.ndarray, s: complex) -> np.ndarray:
    """sum over matrices of |w'(x_i)|^s / |w(x_i) - y_j|^(2s), shape (len x, len y)."""
    x = np.asarray(x, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    total = np.zeros((x.size, y.size), dtype=complex if s.imag else float)
    yr, yi = y.real[None, :], y.imag[None, :]
    for m in mats:
        a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        den = c * x + d
        wx = (a * x + b) / den
        dil2 = 1.0 / np.abs(den) ** 2  # |w'(x)|
        fac = _pow_neg(1.0 / dil2, s)  # |w'(x)|^s
        dx = wx.real[:, None] - yr
        dy = wx.imag[:, None] - yi
        r2 = dx * dx + dy * dy
        total = total + fac[:, None] * _pow_neg(r2, s)
    return total


def _split_identity(ball: WordBall):
    ident = ball.lengths == 0
    return ball.mats[~ident]


def tail_estimate(G: SchottkyGroup, s, max_len: int, x, y) -> float:
    """Geometric tail heuristic C q^max_len / (1 - q); reported, not asserted.

    kappa bounds the contraction of one more letter on the other disks, the
    count growth (2g - 1) per letter is folded into the exponent through
    delta_hat = log(2g - 1) / (-log kappa), and q = kappa^(Re s - delta_hat).
    """
    sr = as_param(s).s.real
    if G.rank == 0:
        return 0.0
    if not G.has_circles:
        return float("inf")
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    kappa = 0.0
    kappa0 = 0.0
    for k in range(2 * G.rank):
        g = G.letter_map(k)
        pole = -g.d / g.c
        for circ in G.circles:
            if circ == G.source_circle(k):
                continue
            dist = abs(pole - circ.center) - circ.radius
            kappa = max(kappa, 1.0 / (abs(g.c) ** 2 * dist**2))
        kappa0 = max(kappa0, float(np.max(1.0 / np.abs(g.c * x + g.d) ** 2)))
    dmin = min(float(np.min(np.abs(y - c.center))) - c.radius for c in G.circles)
    if not (kappa < 1 and dmin > 0):
        return float("inf")
    delta_hat = np.log(2 * G.rank - 1) / -np.log(kappa) if G.rank > 1 else 0.0
    q = kappa ** (sr - delta_hat)
    if q >= 1:
        return float("inf")
    C = 2 * G.rank * kappa0**sr / dmin ** (2 * sr)
    return float(C * q**max_len / (1 - q))


def kernel_value(G: SchottkyGroup, s, x: complex, y: complex, max_len: int):
    """Partial sum of the kernel series over the word ball; returns (value, tail_bound)."""
    p = as_param(s).require_convergent()
    x, y = complex(x), complex(y)
    if abs(x - y) <= 1e-12:
        raise DiagonalSingularityError("kernel is singular on the diagonal x = y")
    ball = word_ball(G, max_len)
    val = _term_sum(ball.mats, np.array([x]), np.array([y]), p.s)[0, 0]
    return complex(val), tail_estimate(G, p, max_len, x, y)


def kernel_remainder(G: SchottkyGroup, s, x, y, max_len: int, words: Optional[WordBall] = None):
    """Kernel minus its identity term 1/|x - y|^(2s); smooth across x = y."""
    p = as_param(s).require_convergent()
    ball = words if words is not None else word_ball(G, max_len)
    out = _term_sum(_split_identity(ball), x, y, p.s)
    return out


def _ball_for(G: SchottkyGroup, s: SpectralParam, nodes, max_len, prune_tol):
    if prune_tol is not None and G.has_circles:
        return pruned_word_ball(G, max_len, nodes, prune_tol, s.s.real)
    return word_ball(G, max_len)


# --- cell finite parts -------------------------------------------------------------


def _octant_rule(n: int = _GL_NODES):
    t, w = np.polynomial.legendre.leggauss(n)
    phis, ws = [], []
    for k in range(8):
        lo = k * np.pi / 4
        phis.append(lo + (t + 1) * np.pi / 8)
        ws.append(w * np.pi / 8)
    return np.concatenate(phis), np.concatenate(ws)


def cell_finite_part(frames: np.ndarray, s) -> np.ndarray:
    """Finite part of the integral of |v|^(-2s) over each cell F [-1/2, 1/2]^2.

    In polar coordinates on the reference square (boundary at radius
    R(phi) = 1 / (2 max(|cos|, |sin|))) the radial integral continues
    analytically to R^(2-2s) / (2-2s), giving

        |det F| / (2 - 2s) * int_0^{2pi} R(phi)^(2-2s) |F e(phi)|^(-2s) dphi,

    integrated octant by octant with Gauss-Legendre (the integrand is smooth
    inside each octant).
    """
    s = as_param(s).s
    if s == 1:
        raise RegimeError("finite part has a logarithmic pole at s = 1")
    frames = np.asarray(frames, dtype=float).reshape(-1, 2, 2)
    phi, w = _octant_rule()
    e = np.stack([np.cos(phi), np.sin(phi)])  # (2, m)
    R = 0.5 / np.maximum(np.abs(e[0]), np.abs(e[1]))
    Fe = frames @ e  # (n, 2, m)
    nFe2 = np.sum(Fe * Fe, axis=1)  # (n, m)
    det = np.abs(frames[:, 0, 0] * frames[:, 1, 1] - frames[:, 0, 1] * frames[:, 1, 0])
    integrand = np.exp((2 - 2 * s) * np.log(R))[None, :] * np.exp(-s * np.log(nFe2))
    out = det / (2 - 2 * s) * (integrand @ w)
    return out if s.imag else out.real


# --- matrices -----------------------------------------------------------------------


@dataclass
class KernelMatrix:
    """Dense discretized operator acting on grid values.

    ``matrix[i, j]`` already includes the column weight, so applying the
    operator to samples f is ``matrix @ f``.
    """

    matrix: np.ndarray
    grid: FormGrid
    s: complex
    max_len: int
    provenance: str
    words: Optional[WordBall] = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    def apply(self, f) -> np.ndarray:
        return self.matrix @ np.asarray(f)

    def kernel(self) -> np.ndarray:
        """Matrix with column weights divided out."""
        return self.matrix / self.grid.weights[None, :]

    def save(self, path) -> tuple[Path, Path]:
        """Binary row-major complex128 (little endian) plus a JSON sidecar."""
        path = Path(path)
        bin_path = path.with_suffix(".bin")
        np.ascontiguousarray(self.matrix, dtype="<c16").tofile(bin_path)
        side = {
            "shape": list(self.matrix.shape),
            "dtype": "complex128",
            "order": "row-major",
            "s": [self.s.real, self.s.imag],
            "max_len": self.max_len,
            "provenance": self.provenance,
            "grid": self.grid.to_dict(),
            "n_words": len(self.words) if self.words is not None else None,
            "meta": self.meta,
        }
        json_path = path.with_suffix(".json")
        json_path.write_text(json.dumps(side, indent=1))
        return bin_path, json_path

    @classmethod
    def load(cls, path) -> "KernelMatrix":
        path = Path(path)
        side = json.loads(path.with_suffix(".json").read_text())
        mat = np.fromfile(path.with_suffix(".bin"), dtype="<c16").reshape(side["shape"])
        g = side["grid"]
        nodes = np.array([complex(a, b) for a, b in g["nodes"]])
        weights = np.array(g["weights"])
        frames = np.broadcast_to(np.eye(2), (len(nodes), 2, 2)) * np.sqrt(weights)[:, None, None]
        grid = FormGrid(nodes, weights, frames, meta=g.get("meta", {}))
        s = complex(*side["s"])
        return cls(mat, grid, s, side["max_len"], side["provenance"], meta=side.get("meta", {}))


def assemble_operator(
    G: SchottkyGroup,
    s,
    grid: FormGrid,
    max_len: int = DEFAULT_MAX_LEN,
    prune_tol: Optional[float] = DEFAULT_PRUNE_TOL,
    words: Optional[WordBall] = None,
) -> KernelMatrix:
    """M[i, j] = S(s; x_i, x_j) w_j off the diagonal; finite-part cell rule on it.

    The word set is the full ball of radius max_len, or (default) the part of
    it whose terms can exceed ``prune_tol`` on this grid; pass ``words`` to
    reuse an exact letter set, e.g. for truncation-matched comparisons.
    """
    p = as_param(s).require_convergent()
    x = grid.nodes
    n = len(x)
    if n == 0:
        raise ConfigError("empty grid")
    if len(np.unique(np.round(x, 14))) != n:
        raise ConfigError("grid nodes must be pairwise distinct")
    if words is None:
        words = _ball_for(G, p, x, max_len, prune_tol)
    w = grid.weights
    diff = x[:, None] - x[None, :]
    r2 = diff.real**2 + diff.imag**2
    np.fill_diagonal(r2, 1.0)
    sing = _pow_neg(r2, p.s)
    np.fill_diagonal(sing, 0.0)
    K = sing + kernel_remainder(G, p, x, x, max_len, words=words)
    M = K * w[None, :]
    M = M.astype(complex)
    M[np.diag_indices(n)] += cell_finite_part(grid.frames, p.s)
    return KernelMatrix(
        M, grid, p.s, max_len, "direct", words=words,
        meta={"n_words": len(words), "pruned": words.pruned, "hit_max_len": words.hit_max_len},
    )


def pullback_operator(
    psi: qc.DiffeoField,
    iso: Optional[GroupIsomorphism],
    S2: KernelMatrix,
    s,
    grid1: FormGrid,
    rtol: float = 1e-9,
) -> KernelMatrix:
    """psi^* S2 on the Gamma_1 grid.

    With J = det Dpsi, forms of weight s pull back as J^(s/2) f o psi, so
    the matrix is J_i^(s/2) S2[i, j] J_j^((s-2)/2): the s/2 factor on outputs
    and the complementary (2-s)/2 factor absorbed into the inputs, the
    push-forward weights being J_j w_j.
    """
    p = as_param(s)
    if S2.s != p.s:
        raise ConfigError("S2 was assembled at a different s")
    if iso is not None and S2.words is not None and len(S2.words) and iso.image.rank != iso.source.rank:
        raise NodeMismatchError("isomorphism does not match the operator's group")
    g2 = S2.grid
    if len(g2) != len(grid1):
        raise NodeMismatchError("grids have different node counts")
    img = np.asarray(psi.map(grid1.nodes), dtype=complex)
    scale = max(1.0, float(np.max(np.abs(img))))
    if not np.max(np.abs(img - g2.nodes)) <= rtol * scale:
        raise NodeMismatchError("Gamma_2 nodes are not the psi-image of the Gamma_1 nodes")
    J = qc.jacobian_det(psi, grid1.nodes)
    if not np.allclose(g2.weights, J * grid1.weights, rtol=1e-9, atol=0):
        raise NodeMismatchError("Gamma_2 weights are not the transformed Gamma_1 weights")
    out_fac = np.exp(0.5 * p.s * np.log(J))
    in_fac = np.exp(0.5 * (p.s - 2) * np.log(J))
    M = out_fac[:, None] * S2.matrix * in_fac[None, :]
    return KernelMatrix(M, grid1, p.s, S2.max_len, "pullback", words=S2.words, meta=dict(S2.meta))


def relative_operator(S1: KernelMatrix, P: KernelMatrix) -> KernelMatrix:
    if S1.shape != P.shape or not np.array_equal(S1.grid.nodes, P.grid.nodes):
        raise NodeMismatchError("operators live on different grids")
    if not np.array_equal(S1.grid.weights, P.grid.weights):
        raise NodeMismatchError("operators use different weights")
    return KernelMatrix(S1.matrix - P.matrix, S1.grid, S1.s, S1.max_len, "relative")


def symmetrized(M: KernelMatrix) -> np.ndarray:
    """W^(1/2) M W^(-1/2): the matrix whose 2-norm is the L2 operator norm."""
    r = np.sqrt(M.grid.weights)
    return r[:, None] * M.matrix / r[None, :]


def weighted_adjoint(M: KernelMatrix) -> np.ndarray:
    """Adjoint for <f, g> = sum w conj(f) g: W^-1 M^H W."""
    w = M.grid.weights
    return (M.matrix.conj().T * w[None, :]) / w[:, None]


def power_seed(n: int) -> np.ndarray:
    v = 1.0 + np.mod(np.arange(1, n + 1) * 0.6180339887498949, 1.0)
    return v / np.linalg.norm(v)


@dataclass
class NormResult:
    value: float
    iterations: int
    bracket: tuple


def operator_norm(M, rtol: float = NORM_RTOL, maxiter: int = NORM_MAXITER, full: bool = False):
    """Largest singular value by power iteration on B^H B, B weight-symmetrized.

    The seed is fixed, 1 + frac(k * golden ratio): deterministic like an
    all-ones start, but not orthogonal to the checkerboard-like top mode that
    symmetric grids produce.  Stops when the Rayleigh quotient moves by less
    than rtol (relative); raises ConvergenceError with the last bracket
    [sqrt(Rayleigh), sqrt(||B^H B v||)] after maxiter iterations.
    """
    B = symmetrized(M) if isinstance(M, KernelMatrix) else np.asarray(M)
    n = B.shape[1]
    if not np.any(B):
        res = NormResult(0.0, 0, (0.0, 0.0))
        return res if full else 0.0
    v = power_seed(n).astype(B.dtype)
    prev = None
    lo = hi = 0.0
    for it in range(1, maxiter + 1):
        u = B @ v
        z = B.conj().T @ u
        ray = float(np.vdot(v, z).real)  # ||B v||^2 with ||v|| = 1
        nz = float(np.linalg.norm(z))
        lo, hi = np.sqrt(max(ray, 0.0)), np.sqrt(nz)
        if nz == 0:
            res = NormResult(0.0, it, (0.0, 0.0))
            return res if full else 0.0
        v = z / nz
        if prev is not None and abs(ray - prev) <= rtol * abs(ray):
            res = NormResult(float(np.sqrt(nz)), it, (lo, hi))
            return res if full else res.value
        prev = ray
    raise ConvergenceError(
        f"power iteration did not converge in {maxiter} iterations; bracket [{lo:.6g}, {hi:.6g}]",
        bracket=(lo, hi),
    )


# --- automorphy -----------------------------------------------------------------------


def check_automorphy(
    G: SchottkyGroup, s, x: complex, y: complex, gamma, max_len: int, variable: str = "x"
) -> float:
    """Residual of the weight-s law with truncation matching.

    ``variable="x"``: |S(s; gamma x, y) |gamma'(x)|^s - S(s; x, y)| where the
    left sum runs over words u gamma^-1, u in the ball, so that it re-indexes
    exactly onto the right sum.  ``variable="y"`` checks S(s; x, gamma y)
    |gamma'(y)|^s against S(s; x, y) the same way (words gamma u).
    """
    p = as_param(s).require_convergent()
    x, y = complex(x), complex(y)
    if abs(x - y) <= 1e-12:
        raise DiagonalSingularityError("x = y")
    letters = tuple(gamma.letters) if hasattr(gamma, "letters") else tuple(gamma)
    g = word_map(G, letters)
    ball = word_ball(G, max_len)
    rhs = _term_sum(ball.mats, np.array([x]), np.array([y]), p.s)[0, 0]
    ginv = invert_word(letters)
    if variable == "x":
        shifted = [reduce_word(u + ginv) for u in ball.letters]
        gx = g(x)
        dil = 1.0 / abs(g.c * x + g.d) ** 2
        mats = np.array([word_map(G, w).matrix for w in shifted])
        lhs = _term_sum(mats, np.array([gx]), np.array([y]), p.s)[0, 0] * dil**p.s
    elif variable == "y":
        shifted = [reduce_word(letters + u) for u in ball.letters]
        gy = g(y)
        dil = 1.0 / abs(g.c * y + g.d) ** 2
        mats = np.array([word_map(G, w).matrix for w in shifted])
        lhs = _term_sum(mats, np.array([x]), np.array([gy]), p.s)[0, 0] * dil**p.s
    else:
        raise ValueError("variable must be 'x' or 'y'")
    return float(abs(lhs - rhs))


# --- deformations -----------------------------------------------------------------------


def image_group(G: SchottkyGroup, psi: qc.DiffeoField) -> SchottkyGroup:
    """The Gamma_2 paired with psi for operator comparisons.

    Moebius psi conjugates exactly.  For other families psi is not
    equivariant for any Moebius group, so Gamma_2 is the Schottky group on
    the image circles' stand-ins: centres psi(c), radii r sqrt(det Dpsi(c)),
    same twist angles.
    """
    if isinstance(psi, qc.Identity):
        return G
    if isinstance(psi, qc.MoebiusDiffeo):
        return conjugate_group(G, psi.g)
    if not G.has_circles:
        raise ConfigError("deforming a group needs its circle data")
    pairs = []
    for pr in G.pairings:
        circ = []
        for c in (pr.A, pr.B):
            J = float(qc.jacobian_det(psi, np.array([c.center]))[0])
            circ.append(Circle(complex(psi.map(c.center)), c.radius * np.sqrt(J)))
        pairs.append((circ[0], circ[1], pr.theta))
    return build_schottky(pairs, rect=None, require_origin=False)


@dataclass
class RelativeRun:
    S1: KernelMatrix
    pullback: KernelMatrix
    relative: KernelMatrix
    norm: float
    image: SchottkyGroup


def relative_scattering(
    G1: SchottkyGroup,
    psi: qc.DiffeoField,
    s=DEFAULT_S,
    n_side: int = DEFAULT_GRID,
    max_len: int = DEFAULT_MAX_LEN,
    prune_tol: Optional[float] = DEFAULT_PRUNE_TOL,
    G2: Optional[SchottkyGroup] = None,
) -> RelativeRun:
    """S_rel = S1 - psi^* S2 with truncation-matched word sets, and its norm.

    Both sums run over the same letter sequences (chosen on Gamma_1 and
    carried to Gamma_2 by the generator correspondence), so for Moebius psi
    the two matrices agree term by term.
    """
    p = as_param(s).require_convergent()
    G2 = G2 if G2 is not None else image_group(G1, psi)
    iso = GroupIsomorphism(G1, G2)
    grid1 = tensor_grid(G1, n_side)
    grid2 = pushforward_grid(psi, grid1)
    S1 = assemble_operator(G1, p, grid1, max_len, prune_tol)
    S2 = assemble_operator(G2, p, grid2, max_len, words=iso.map_ball(S1.words))
    P = pullback_operator(psi, iso, S2, p, grid1)
    R = relative_operator(S1, P)
    return RelativeRun(S1, P, R, operator_norm(R), G2)
