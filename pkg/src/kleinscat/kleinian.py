"""Classical Schottky groups built from circle pairings.

Letters are integers: ``2*i`` is generator ``i`` and ``2*i + 1`` its inverse,
so the letter order g1, g1^-1, g2, g2^-1, ... is plain integer order and the
inverse of letter ``k`` is ``k ^ 1``.  A word ``(l1, ..., ln)`` denotes the map
``g_l1 o ... o g_ln``.

Generator ``i`` carries the exterior of circle A_i onto the interior of
circle B_i, so a letter's *source* circle is the one whose exterior it
contracts and its *target* circle is where the image lands.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    OverlappingCirclesError,
    ParabolicGeneratorError,
    TruncationError,
)
from .moebius import (
    MapClass,
    MoebiusMap,
    apply_array,
    classify,
    compose,
    inverse,
)

BOUNDARY_CHECK_TOL = 1e-9


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ConfigError(f"circle radius must be positive, got {self.radius}")

    def boundary(self, n: int = 16, phase: float = 0.0) -> np.ndarray:
        t = phase + 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * t)

    def contains(self, z, closed: bool = True):
        dist = np.abs(np.asarray(z) - self.center)
        return dist <= self.radius if closed else dist < self.radius

    def gap(self, other: "Circle") -> float:
        """Distance between the two closed disks (negative when they overlap)."""
        return abs(self.center - other.center) - self.radius - other.radius

    def to_dict(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "Circle":
        c = d["center"]
        return cls(complex(c[0], c[1]), d["radius"])


def pairing_generator(A: Circle, B: Circle, theta: float = 0.0) -> MoebiusMap:
    """Moebius map taking the exterior of A onto the interior of B.

    Inversion in A followed by the anticonformal similarity that reflects A
    onto B across their bisector, then a rotation by ``theta`` about the
    center of B.  Concretely ``z -> c_B - e^{i theta} v^2 r_A r_B / (z - c_A)``
    with ``v`` the unit vector from c_A to c_B.  At ``theta = 0`` tangent
    circles give a parabolic map, as in the classical construction.
    """
    diff = B.center - A.center
    v = diff / abs(diff) if diff != 0 else 1.0
    k = -np.exp(1j * theta) * v * v * A.radius * B.radius
    # (c_B (z - c_A) + k) / (z - c_A)
    return MoebiusMap(B.center, k - B.center * A.center, 1.0, -A.center)


@dataclass(frozen=True)
class CirclePairing:
    A: Circle
    B: Circle
    theta: float
    generator: MoebiusMap

    def to_dict(self) -> dict:
        return {"A": self.A.to_dict(), "B": self.B.to_dict(), "theta": self.theta}


def _check_pairing(p: CirclePairing) -> None:
    pts = p.A.boundary(16)
    img = apply_array(p.generator, pts)
    err = np.max(np.abs(np.abs(img - p.B.center) - p.B.radius))
    if not err <= BOUNDARY_CHECK_TOL * max(1.0, p.B.radius):
        raise ConfigError(f"generator does not carry circle A onto circle B (error {err:.3e})")


@dataclass(frozen=True)
class SchottkyGroup:
    """Free group on ``rank`` generators, optionally with its circle data.

    ``pairings`` is empty for groups given only by generators (e.g. a bare
    dilation) and for the trivial group; domain-dependent operations need
    circles or a rectangle.
    """

    generators: tuple
    pairings: tuple = ()
    rect: Optional[tuple] = None

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def circles(self) -> list[Circle]:
        out = []
        for p in self.pairings:
            out.extend([p.A, p.B])
        return out

    @property
    def has_circles(self) -> bool:
        return len(self.pairings) == len(self.generators) and len(self.pairings) > 0

    def letter_map(self, k: int) -> MoebiusMap:
        g = self.generators[k >> 1]
        return inverse(g) if k & 1 else g

    def target_circle(self, k: int) -> Circle:
        p = self.pairings[k >> 1]
        return p.A if k & 1 else p.B

    def source_circle(self, k: int) -> Circle:
        p = self.pairings[k >> 1]
        return p.B if k & 1 else p.A

    @classmethod
    def trivial(cls, rect=None) -> "SchottkyGroup":
        return cls(generators=(), pairings=(), rect=_rect(rect))

    @classmethod
    def from_generators(cls, gens: Sequence[MoebiusMap], rect=None) -> "SchottkyGroup":
        for g in gens:
            if classify(g) != MapClass.LOXODROMIC:
                raise ParabolicGeneratorError(f"generator {g} is not loxodromic")
        return cls(generators=tuple(gens), pairings=(), rect=_rect(rect))

    def to_dict(self) -> dict:
        d: dict = {}
        if self.pairings:
            d["pairings"] = [p.to_dict() for p in self.pairings]
        else:
            d["generators"] = [g.to_list() for g in self.generators]
        if self.rect is not None:
            d["rect"] = list(self.rect)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SchottkyGroup":
        rect = d.get("rect")
        if "generators" in d and not d.get("pairings"):
            gens = [MoebiusMap.from_list(v) for v in d["generators"]]
            if not gens:
                raise ConfigError("empty generator list")
            return cls.from_generators(gens, rect=rect)
        pairs = d.get("pairings")
        if not pairs:
            raise ConfigError("group definition needs a non-empty 'pairings' list")
        pairings = [
            (Circle.from_dict(p["A"]), Circle.from_dict(p["B"]), float(p.get("theta", 0.0)))
            for p in pairs
        ]
        return build_schottky(pairings, rect=rect)


def _rect(rect):
    if rect is None:
        return None
    xmin, xmax, ymin, ymax = (float(v) for v in rect)
    if not (xmin < xmax and ymin < ymax):
        raise ConfigError(f"degenerate reference rectangle {rect}")
    return (xmin, xmax, ymin, ymax)


def build_schottky(pairings, rect=None, require_origin: bool = True) -> SchottkyGroup:
    """Build a Schottky group from ``(A, B)`` or ``(A, B, theta)`` circle pairs."""
    if not pairings:
        raise ConfigError("at least one circle pairing is required")
    built = []
    for item in pairings:
        A, B = item[0], item[1]
        theta = float(item[2]) if len(item) > 2 else 0.0
        g = pairing_generator(A, B, theta)
        cls_ = classify(g)
        if cls_ != MapClass.LOXODROMIC:
            raise ParabolicGeneratorError(
                f"pairing of circles at {A.center} and {B.center} gives a {cls_.value} generator"
            )
        p = CirclePairing(A, B, theta, g)
        _check_pairing(p)
        built.append(p)
    circles = [c for p in built for c in (p.A, p.B)]
    for i in range(len(circles)):
        for j in range(i + 1, len(circles)):
            gap = circles[i].gap(circles[j])
            if not gap > 0:
                raise OverlappingCirclesError(
                    f"circles {i} and {j} are not disjoint (gap {gap:.3g})"
                )
    if require_origin and any(c.contains(0j) for c in circles):
        raise ConfigError("0 must lie in the common exterior of the circles")
    return SchottkyGroup(
        generators=tuple(p.generator for p in built), pairings=tuple(built), rect=_rect(rect)
    )


def image_circle(h: MoebiusMap, c: Circle) -> Circle:
    pts = apply_array(h, c.boundary(3, phase=0.3))
    return circumcircle(*pts)


def circumcircle(z1: complex, z2: complex, z3: complex) -> Circle:
    w = (z3 - z1) / (z2 - z1)
    if abs(w.imag) < 1e-14:
        raise ConfigError("points are collinear")
    center = (z2 - z1) * (w - abs(w) ** 2) / (2j * w.imag) + z1
    return Circle(center, abs(z1 - center))


def conjugate_group(G: SchottkyGroup, h: MoebiusMap) -> SchottkyGroup:
    """The group h G h^-1 with circles carried along by h.

    The pole of ``h`` must lie in the common exterior, otherwise a disk would
    be sent to the outside of its image circle.  The reference rectangle is
    not carried over (its image is not a rectangle).
    """
    hinv = inverse(h)
    gens = tuple(compose(compose(h, g), hinv) for g in G.generators)
    if not G.pairings:
        return SchottkyGroup(generators=gens, pairings=(), rect=None)
    if h.c != 0:
        pole = -h.d / h.c
        if any(c.contains(pole) for c in G.circles):
            raise ConfigError("conjugating map has its pole inside a pairing disk")
    pairs = []
    for p, g in zip(G.pairings, gens):
        pairs.append(CirclePairing(image_circle(h, p.A), image_circle(h, p.B), p.theta, g))
    return SchottkyGroup(generators=gens, pairings=tuple(pairs), rect=None)


# --- words -----------------------------------------------------------------


@dataclass(frozen=True)
class GroupWord:
    letters: tuple
    map: MoebiusMap = field(compare=False)

    def __len__(self):
        return len(self.letters)

    @property
    def label(self) -> str:
        return word_label(self.letters)


def word_label(letters) -> str:
    if not letters:
        return "e"
    return "".join(
        (chr(ord("a") + (k >> 1)).upper() if k & 1 else chr(ord("a") + (k >> 1))) for k in letters
    )


def is_reduced(letters) -> bool:
    return all(letters[i] != (letters[i + 1] ^ 1) for i in range(len(letters) - 1))


def reduce_word(letters) -> tuple:
    out: list = []
    for k in letters:
        if out and out[-1] == (k ^ 1):
            out.pop()
        else:
            out.append(k)
    return tuple(out)


def invert_word(letters) -> tuple:
    return tuple(k ^ 1 for k in reversed(letters))


def word_map(G: SchottkyGroup, letters) -> MoebiusMap:
    m = np.eye(2, dtype=complex)
    for k in letters:
        m = m @ G.letter_map(k).matrix
    return MoebiusMap.from_matrix(m)


def ball_count(rank: int, max_len: int) -> int:
    """Number of reduced words of length <= max_len in the free group."""
    if rank == 0 or max_len <= 0:
        return 1
    if rank == 1:
        return 1 + 2 * max_len
    q = 2 * rank - 1
    return 1 + 2 * rank * (q**max_len - 1) // (q - 1)


@dataclass
class WordBall:
    """A finite set of reduced words with their matrices, stored flat.

    ``letters[i]`` is a tuple and ``mats[i]`` the 2x2 matrix of the word;
    ``lengths`` is an int array.  Words are in length-lexicographic order.
    """

    letters: list
    mats: np.ndarray
    lengths: np.ndarray
    pruned: bool = False
    # pruned balls: True when words of length max_len survived the cutoff
    hit_max_len: bool = False

    def __len__(self):
        return len(self.letters)

    def realize(self, G: SchottkyGroup) -> "WordBall":
        """Same letter sequences evaluated in another group of equal rank."""
        mats = np.array([_letters_matrix(G, w) for w in self.letters]).reshape(-1, 2, 2)
        return WordBall(list(self.letters), mats, self.lengths.copy(), self.pruned, self.hit_max_len)

    def maps(self) -> list[MoebiusMap]:
        return [MoebiusMap.from_matrix(m) for m in self.mats]


def _letters_matrix(G: SchottkyGroup, letters) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for k in letters:
        m = m @ G.letter_map(k).matrix
    return m


def _letter_mats(G: SchottkyGroup) -> np.ndarray:
    return np.array([G.letter_map(k).matrix for k in range(2 * G.rank)]).reshape(-1, 2, 2)


def word_ball(G: SchottkyGroup, max_len: int) -> WordBall:
    """Every reduced word of length <= max_len, in length-lexicographic order."""
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    L = _letter_mats(G)
    letters = [()]
    mats = [np.eye(2, dtype=complex)[None]]
    lengths = [np.zeros(1, dtype=int)]
    prev_letters = [()]
    prev_mats = np.eye(2, dtype=complex)[None]
    for ell in range(1, max_len + 1):
        if G.rank == 0:
            break
        new_letters = []
        parent_idx = []
        letter_idx = []
        for i, w in enumerate(prev_letters):
            last = w[-1] if w else None
            for k in range(2 * G.rank):
                if last is not None and k == (last ^ 1):
                    continue
                new_letters.append(w + (k,))
                parent_idx.append(i)
                letter_idx.append(k)
        new_mats = np.einsum("nij,njk->nik", prev_mats[parent_idx], L[letter_idx])
        letters.extend(new_letters)
        mats.append(new_mats)
        lengths.append(np.full(len(new_letters), ell, dtype=int))
        prev_letters, prev_mats = new_letters, new_mats
    return WordBall(letters, np.concatenate(mats), np.concatenate(lengths))


def _sup_derivative(mats: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """max over pts of |w'(x)| = 1/|c x + d|^2, for a stack of matrices."""
    c = mats[:, 1, 0][:, None]
    d = mats[:, 1, 1][:, None]
    den = np.abs(c * pts[None, :] + d)
    return 1.0 / np.min(den, axis=1) ** 2


def pruned_word_ball(
    G: SchottkyGroup,
    max_len: int,
    points: np.ndarray,
    prune_tol: float,
    exponent: float,
) -> WordBall:
    """Reduced words of length <= max_len whose kernel terms can exceed prune_tol.

    The bound for a word w is ``max_x |w'(x)|^exponent / dmin^(2 exponent)``
    with x over ``points`` and dmin the smallest distance from the points to
    any pairing disk.  Words are grown by prepending letters, and for a
    Schottky group prepending contracts (the inner image already sits in a
    disk not being inverted), so a pruned word's whole subtree is dropped.
    Requires circle data.
    """
    if not G.has_circles:
        raise ConfigError("pruned enumeration needs circle data")
    pts = np.asarray(points, dtype=complex).ravel()
    dmin = min(float(np.min(np.abs(pts - c.center))) - c.radius for c in G.circles)
    if dmin <= 0:
        raise ConfigError("sample points touch a pairing disk; cannot bound kernel terms")
    L = _letter_mats(G)
    scale = dmin ** (-2.0 * exponent)

    out_letters = [()]
    out_mats = [np.eye(2, dtype=complex)[None]]
    out_len = [0]
    prev_letters = [()]
    prev_mats = np.eye(2, dtype=complex)[None]
    for ell in range(1, max_len + 1):
        if G.rank == 0 or not prev_letters:
            break
        cand_letters = []
        parent_idx = []
        letter_idx = []
        for i, w in enumerate(prev_letters):
            first = w[0] if w else None
            for k in range(2 * G.rank):
                if first is not None and k == (first ^ 1):
                    continue
                cand_letters.append((k,) + w)
                parent_idx.append(i)
                letter_idx.append(k)
        cand = np.einsum("nij,njk->nik", L[letter_idx], prev_mats[parent_idx])
        bound = _sup_derivative(cand, pts) ** exponent * scale
        keep = np.nonzero(bound > prune_tol)[0]
        prev_letters = [cand_letters[i] for i in keep]
        prev_mats = cand[keep]
        order = sorted(range(len(prev_letters)), key=lambda i: prev_letters[i])
        out_letters.extend(prev_letters[i] for i in order)
        out_mats.append(prev_mats[order])
        out_len.extend([ell] * len(order))
    return WordBall(
        out_letters,
        np.concatenate(out_mats),
        np.array(out_len, dtype=int),
        pruned=True,
        hit_max_len=bool(prev_letters) and max_len > 0,
    )


def enumerate_words(G: SchottkyGroup, max_len: int) -> Iterator[GroupWord]:
    """Yield every reduced word of length <= max_len once, identity first."""
    ball = word_ball(G, max_len)
    for w, m in zip(ball.letters, ball.mats):
        yield GroupWord(tuple(w), MoebiusMap.from_matrix(m))


def in_fundamental_domain(G: SchottkyGroup, z) -> bool:
    z = complex(z)
    for c in G.circles:
        if not abs(z - c.center) > c.radius:
            return False
    if G.rect is not None:
        xmin, xmax, ymin, ymax = G.rect
        if not (xmin <= z.real <= xmax and ymin <= z.imag <= ymax):
            return False
    return True


def in_fundamental_domain_array(G: SchottkyGroup, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    ok = np.ones(z.shape, dtype=bool)
    for c in G.circles:
        ok &= np.abs(z - c.center) > c.radius
    if G.rect is not None:
        xmin, xmax, ymin, ymax = G.rect
        ok &= (z.real >= xmin) & (z.real <= xmax) & (z.imag >= ymin) & (z.imag <= ymax)
    return ok


def displacements(ball: WordBall) -> np.ndarray:
    """base_displacement for every word of a ball, vectorized."""
    frob = np.sum(np.abs(ball.mats) ** 2, axis=(1, 2))
    return np.arccosh(np.maximum(1.0, 0.5 * frob))


def orbital_counts(G: SchottkyGroup, radii, max_len: int) -> np.ndarray:
    """N(R) = #{w : rho(j, w j) <= R} for each R in ``radii``."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    ball = word_ball(G, max_len)
    disp = displacements(ball)
    if G.rank > 0:
        last = disp[ball.lengths == max_len]
        rmax = float(np.max(radii))
        if max_len == 0 or not np.min(last) > rmax:
            shortest = float(np.min(last)) if last.size else 0.0
            raise TruncationError(
                f"words of length {max_len} reach displacement {shortest:.4g} <= R = {rmax:.4g}; "
                "increase max_len"
            )
    disp = np.sort(disp)
    slack = 1e-12 * np.maximum(1.0, radii)
    return np.searchsorted(disp, radii + slack, side="right")


def orbital_count(G: SchottkyGroup, R: float, max_len: int) -> int:
    return int(orbital_counts(G, [R], max_len)[0])


def min_length_for_radius(G: SchottkyGroup, R: float, max_words: int = 2_000_000) -> int:
    """Smallest word length whose words all displace j by more than R."""
    n = 1
    while ball_count(G.rank, n) <= max_words:
        ball = word_ball(G, n)
        if np.min(displacements(ball)[ball.lengths == n]) > R:
            return n
        n += 1
    raise TruncationError(f"no truncation within {max_words} words clears R = {R}")


@dataclass(frozen=True)
class GroupIsomorphism:
    """Generator-to-generator assignment from a source group onto ``image``.

    ``assignment[i] = (j, inv)`` sends generator i to generator j of the image
    (inverted when ``inv``).  The default is the identity on indices.
    """

    source: SchottkyGroup
    image: SchottkyGroup
    assignment: tuple = ()

    def __post_init__(self):
        if self.source.rank != self.image.rank:
            raise ConfigError("isomorphic free groups must have equal rank")
        if not self.assignment:
            object.__setattr__(
                self, "assignment", tuple((i, False) for i in range(self.source.rank))
            )

    def map_letters(self, letters) -> tuple:
        out = []
        for k in letters:
            j, inv = self.assignment[k >> 1]
            out.append(2 * j + ((k & 1) ^ int(inv)))
        return tuple(out)

    def map_ball(self, ball: WordBall) -> WordBall:
        letters = [self.map_letters(w) for w in ball.letters]
        mats = np.array([_letters_matrix(self.image, w) for w in letters]).reshape(-1, 2, 2)
        return WordBall(letters, mats, ball.lengths.copy(), ball.pruned, ball.hit_max_len)

    def is_identity_assignment(self) -> bool:
        return all(j == i and not inv for i, (j, inv) in enumerate(self.assignment))

    def check_conjugation(self, h: MoebiusMap, max_len: int = 4, tol: float = 1e-9) -> bool:
        """True when phi(w) = h w h^-1 for all words of length <= max_len."""
        hinv = inverse(h)
        for w in enumerate_words(self.source, max_len):
            lhs = word_map(self.image, self.map_letters(w.letters))
            rhs = compose(compose(h, w.map), hinv)
            if not lhs.close_to(rhs, tol * max(1.0, np.max(np.abs(rhs.matrix)))):
                return False
        return True
