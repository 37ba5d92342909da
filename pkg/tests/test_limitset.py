import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleinscat.errors import DegenerateRangeError, TruncationError
from kleinscat.limitset import (
    box_dimension,
    exponent_of_convergence,
    limit_set_contained,
    orbital_growth,
    sample_limit_set,
)
from kleinscat.moebius import MoebiusMap, apply_array

from conftest import make_rank2


def cantor(level):
    """Left and right endpoints of the level-`level` middle-thirds intervals."""
    pts = np.zeros(1)
    for _ in range(level):
        pts = np.concatenate([pts / 3, pts / 3 + 2 / 3])
    return np.concatenate([pts, pts + 3.0**-level]) + 0j


@pytest.fixture(scope="module")
def thin():
    return make_rank2(0.1)


def test_cantor_dimension():
    est = box_dimension(cantor(8))
    assert abs(est.dimension - math.log(2) / math.log(3)) < 0.05
    assert len(est.scales) == 8


def test_circle_dimension():
    t = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
    assert box_dimension(np.exp(1j * t)).dimension == pytest.approx(1.0, abs=0.05)


def test_filled_square_dimension(rng):
    z = rng.random(40_000) + 1j * rng.random(40_000)
    assert box_dimension(z, scales=range(2, 7)).dimension == pytest.approx(2.0, abs=0.1)


def test_two_points_degenerate():
    with pytest.raises(DegenerateRangeError):
        box_dimension(np.array([0, 1 + 0j]))


def test_rank1_limit_set_is_fixed_point_pair(rank1):
    g = rank1.generators[0]
    for n in (1, 4, 7):
        s = sample_limit_set(rank1, n)
        assert len(s) == 2 and s.finite
        assert np.allclose(np.sort(np.abs(s.points)), [2 * math.sqrt(2)] * 2)
        assert np.allclose(apply_array(g, s.points), s.points)
    assert box_dimension(sample_limit_set(rank1, 5)).dimension == 0.0


def test_word_len_one(rank2):
    s = sample_limit_set(rank2, 1)
    assert len(s) == 4
    with pytest.raises(ValueError):
        sample_limit_set(rank2, 0)


def test_containment_and_count(rank2):
    s = sample_limit_set(rank2, 6)
    assert limit_set_contained(rank2, s)
    assert len(s) <= 4 * 3**5


def test_csv_export(tmp_path, rank2):
    s = sample_limit_set(rank2, 3)
    path = tmp_path / "pts.csv"
    s.to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "re,im" and len(rows) == len(s) + 1
    z = complex(*map(float, rows[1].split(",")))
    assert z == s.points[0]


def test_estimate_json(thin):
    est = box_dimension(sample_limit_set(thin, 6), scales="resolved")
    d = json.loads(est.to_json())
    assert set(d) >= {"dimension", "stderr", "scales"}


def test_rank1_delta():
    from conftest import make_rank1

    assert exponent_of_convergence(make_rank1(), 60.0) < 0.05


def test_delta_matches_box_dimension(thin):
    fit = orbital_growth(thin, 40.0)
    est = box_dimension(sample_limit_set(thin, 6), scales="resolved")
    assert fit.exponent < 1
    assert abs(fit.exponent - est.dimension) <= 2 * (fit.stderr + est.stderr)


def test_delta_decreases_with_radius(thin):
    d1 = exponent_of_convergence(thin, 40.0)
    d2 = exponent_of_convergence(make_rank2(0.05), 40.0)
    assert d2 < d1


def test_truncation_propagates(rank2):
    with pytest.raises(TruncationError):
        exponent_of_convergence(rank2, 40.0, max_len=4)


@pytest.mark.parametrize("h", [MoebiusMap(1, 0.2, 0.02, 1), MoebiusMap(1.2, 0, 0, 1 / 1.2)])
def test_moebius_invariance(rank2, h):
    s = sample_limit_set(rank2, 6)
    base = box_dimension(s)
    moved = box_dimension(apply_array(h, s.points))
    assert abs(moved.dimension - base.dimension) < max(base.stderr, moved.stderr)


def test_deterministic(thin):
    a = box_dimension(sample_limit_set(thin, 5), scales="resolved")
    b = box_dimension(sample_limit_set(thin, 5), scales="resolved")
    assert a.to_json() == b.to_json()


@given(st.floats(0.05, 50.0), st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=25, deadline=None)
def test_similarity_invariance(scale, tx, ty):
    z = cantor(8) * scale + complex(tx, ty)
    est = box_dimension(z)
    assert abs(est.dimension - math.log(2) / math.log(3)) < 0.08
    assert 0 <= est.dimension <= 2
