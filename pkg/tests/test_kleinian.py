import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleinscat.errors import (
    ConfigError,
    OverlappingCirclesError,
    ParabolicGeneratorError,
    TruncationError,
)
from kleinscat.kleinian import (
    Circle,
    GroupIsomorphism,
    SchottkyGroup,
    ball_count,
    build_schottky,
    conjugate_group,
    enumerate_words,
    in_fundamental_domain,
    invert_word,
    is_reduced,
    min_length_for_radius,
    orbital_count,
    orbital_counts,
    pruned_word_ball,
    reduce_word,
    word_ball,
    word_map,
)
from kleinscat.moebius import MapClass, MoebiusMap, apply_array, classify, compose

from conftest import RECT, make_rank2


def test_generator_maps_circle_onto_circle(rank2):
    for p in rank2.pairings:
        img = apply_array(p.generator, p.A.boundary(64, phase=0.1))
        assert np.max(np.abs(np.abs(img - p.B.center) - p.B.radius)) < 1e-9
        # exterior of A goes inside B
        assert abs(p.generator(0) - p.B.center) < p.B.radius


def test_twisted_pairing_is_still_a_pairing():
    G = build_schottky([(Circle(-3, 1), Circle(3, 0.5), 0.9)])
    g = G.generators[0]
    assert classify(g) == MapClass.LOXODROMIC
    img = apply_array(g, Circle(-3, 1).boundary(32))
    assert np.allclose(np.abs(img - 3), 0.5, atol=1e-9)


def test_tangent_circles_give_parabolic():
    with pytest.raises(ParabolicGeneratorError):
        build_schottky([(Circle(-1, 1), Circle(1, 1))], require_origin=False)


def test_overlapping_circles_rejected():
    with pytest.raises(OverlappingCirclesError):
        build_schottky([(Circle(-3, 1), Circle(3, 1)), (Circle(-2.5, 1), Circle(4j, 1))])


def test_empty_and_origin_rules():
    with pytest.raises(ConfigError):
        build_schottky([])
    with pytest.raises(ConfigError):
        build_schottky([(Circle(0, 1), Circle(5, 1))])


def test_json_roundtrip(rank2):
    d = json.loads(json.dumps(rank2.to_dict()))
    G = SchottkyGroup.from_dict(d)
    assert G.rank == 2 and G.rect == RECT
    for g, h in zip(G.generators, rank2.generators):
        assert g.close_to(h, 1e-14)


def test_ball_sizes(rank1, rank2):
    assert len(word_ball(rank1, 5)) == 11 == ball_count(1, 5)
    for L in range(5):
        assert len(word_ball(rank2, L)) == ball_count(2, L)
    # free group of rank 2: 1 + 4 + 12 + 36
    assert ball_count(2, 3) == 53


def test_words_reduced_and_unique(rank2):
    ws = list(enumerate_words(rank2, 4))
    labels = {w.label for w in ws}
    assert len(labels) == len(ws)
    assert all(is_reduced(w.letters) for w in ws)
    assert ws[0].letters == ()


def test_distinct_words_give_distinct_maps(rank2):
    mats = word_ball(rank2, 4).mats
    flat = np.concatenate([mats.reshape(len(mats), -1), -mats.reshape(len(mats), -1)])
    key = np.round(flat, 8)
    assert len(np.unique(key, axis=0)) == 2 * len(mats)


@given(st.lists(st.integers(0, 3), max_size=12))
@settings(max_examples=100, deadline=None)
def test_reduction_respects_maps(letters):
    G = make_rank2()
    r = reduce_word(letters)
    assert is_reduced(r)
    assert word_map(G, letters).close_to(word_map(G, r), 1e-6 * max(1, np.max(np.abs(word_map(G, r).matrix))))
    inv = word_map(G, invert_word(r))
    assert compose(word_map(G, r), inv).close_to(MoebiusMap.identity(), 1e-6)


def test_fundamental_domain(rank2):
    assert in_fundamental_domain(rank2, 0)
    assert not in_fundamental_domain(rank2, 3)
    assert in_fundamental_domain(rank2, 1 + 1j)  # rectangle is closed
    assert not in_fundamental_domain(rank2, 1.5)


def test_translates_leave_the_domain(rank2):
    # every nontrivial word sends the exterior into one of the disks
    pts = np.array([0, 0.5 + 0.5j, -0.9j])
    for w in list(enumerate_words(rank2, 3))[1:]:
        img = apply_array(w.map, pts)
        assert not any(in_fundamental_domain(rank2, z) for z in img)


def test_orbital_counts(rank1, rank2):
    # rank 1: displacements are |n| * ell, ell = 2 acosh(3) (translation length)
    g = rank1.generators[0]
    ell = 2 * np.arccosh(abs(g.trace) / 2)
    R = 5.5 * ell
    assert orbital_count(rank1, R, 8) == 11
    counts = orbital_counts(rank2, [4.0, 8.0, 12.0], 8)
    assert np.all(np.diff(counts) > 0)
    with pytest.raises(TruncationError):
        orbital_counts(rank2, [40.0], 3)


def test_min_length_for_radius(rank1):
    n = min_length_for_radius(rank1, 30.0)
    orbital_counts(rank1, [30.0], n)
    with pytest.raises(TruncationError):
        orbital_counts(rank1, [30.0], n - 1)


def test_pruned_ball_subset(rank2):
    pts = np.array([0, 0.9 + 0.9j])
    full = word_ball(rank2, 6)
    pr = pruned_word_ball(rank2, 6, pts, 1e-10, 3.0)
    assert set(pr.letters) <= set(full.letters)
    assert len(pr) < len(full)
    # every dropped word is genuinely below the cutoff
    kept = set(pr.letters)
    dmin = min(np.min(np.abs(pts - c.center)) - c.radius for c in rank2.circles)
    for w, m in zip(full.letters, full.mats):
        if w not in kept:
            sup = np.max(1 / np.abs(m[1, 0] * pts + m[1, 1]) ** 2)
            assert sup**3 / dmin**6 <= 1e-10 * (1 + 1e-9)


def test_conjugation_isomorphism(rank2):
    h = MoebiusMap(1, 0.1, 0.05, 1)
    G2 = conjugate_group(rank2, h)
    iso = GroupIsomorphism(rank2, G2)
    assert iso.is_identity_assignment()
    assert iso.check_conjugation(h, 4)
    assert not GroupIsomorphism(rank2, G2, ((1, False), (0, False))).check_conjugation(h, 2)
    # conjugated circles are still paired by the conjugated generators
    for p in G2.pairings:
        img = apply_array(p.generator, p.A.boundary(16))
        assert np.allclose(np.abs(img - p.B.center), p.B.radius, atol=1e-9)


def test_groups_are_immutable(rank2):
    with pytest.raises(Exception):
        rank2.rect = None
