import cmath
import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kleinscat.moebius import (
    INF,
    MapClass,
    MoebiusMap,
    apply,
    attracting_fixed_point,
    base_displacement,
    classify,
    compose,
    conformal_dilation,
    derivative,
    fixed_points,
    inverse,
    is_inf,
)
from kleinscat.errors import PoleError

coord = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, coord, coord)


@st.composite
def maps(draw):
    a, b, c, d = (draw(cplx) for _ in range(4))
    assume(abs(a * d - b * c) > 1e-2)
    return MoebiusMap(a, b, c, d)


def test_normalization_and_sign():
    g = MoebiusMap(2, 0, 0, 2)
    assert g.close_to(MoebiusMap.identity())
    h = MoebiusMap(-1, -2, 0, -1)
    assert h.a.real > 0
    assert abs(h.det() - 1) < 1e-15


def test_singular_matrix_rejected():
    with pytest.raises(ValueError):
        MoebiusMap(1, 2, 2, 4)


def test_infinity_handling():
    g = MoebiusMap(1, 0, 1, 1)
    assert apply(g, INF) == 1
    assert is_inf(apply(g, -1))
    assert is_inf(apply(MoebiusMap(2, 0, 0, 0.5), INF))


def test_dilation_at_pole_raises():
    g = MoebiusMap(0, -1, 1, 0)
    with pytest.raises(PoleError):
        conformal_dilation(g, 0)
    with pytest.raises(PoleError):
        conformal_dilation(g, INF)


def test_dilation_inversion():
    g = MoebiusMap(0, -1, 1, 0)  # z -> -1/z
    assert conformal_dilation(g, 2) == pytest.approx(0.25)


def test_classification():
    assert classify(MoebiusMap.identity()) == MapClass.IDENTITY
    assert classify(MoebiusMap(1, 1, 0, 1)) == MapClass.PARABOLIC
    rot = cmath.exp(0.3j)
    assert classify(MoebiusMap(rot, 0, 0, 1 / rot)) == MapClass.ELLIPTIC
    assert classify(MoebiusMap(2, 0, 0, 0.5)) == MapClass.LOXODROMIC
    assert classify(MoebiusMap(2j, 0, 0, -0.5j)) == MapClass.LOXODROMIC


def test_base_displacement_dilation():
    # z -> k z moves j = (0,0,1) to (0,0,k): distance ln k
    k = 5.0
    g = MoebiusMap(math.sqrt(k), 0, 0, 1 / math.sqrt(k))
    assert base_displacement(g) == pytest.approx(math.log(k), rel=1e-12)
    assert base_displacement(MoebiusMap.identity()) == 0.0


def test_fixed_points_order():
    g = MoebiusMap(2, 0, 0, 0.5)  # z -> 4z, repels from 0
    att, rep = fixed_points(g)
    assert is_inf(att) and rep == 0
    h = inverse(g)
    assert attracting_fixed_point(h) == 0


@given(maps(), maps(), cplx)
@settings(max_examples=80, deadline=None)
def test_composition_is_action(g, h, z):
    gh = compose(g, h)
    hz = apply(h, z)
    assume(not is_inf(hz) and abs(hz) < 1e6)
    lhs, rhs = apply(gh, z), apply(g, hz)
    assume(not is_inf(lhs) and not is_inf(rhs) and abs(rhs) < 1e6)
    assert abs(lhs - rhs) <= 1e-7 * max(1.0, abs(rhs))


@given(maps())
@settings(max_examples=80, deadline=None)
def test_inverse_and_det(g):
    assert abs(g.det() - 1) < 1e-12
    assert compose(g, inverse(g)).close_to(MoebiusMap.identity(), 1e-8)


@given(maps(), cplx)
@settings(max_examples=80, deadline=None)
def test_derivative_matches_difference_quotient(g, z):
    den = g.c * z + g.d
    assume(abs(den) > 1e-1)
    h = 1e-6
    fd = (apply(g, z + h) - apply(g, z - h)) / (2 * h)
    assert abs(fd - derivative(g, z)) <= 1e-5 * max(1.0, abs(fd))
    assert conformal_dilation(g, z) == pytest.approx(abs(derivative(g, z)), rel=1e-12)


@given(maps())
@settings(max_examples=60, deadline=None)
def test_displacement_conjugation_invariant_under_rotation(g):
    rot = cmath.exp(0.7j)
    R = MoebiusMap(rot, 0, 0, 1 / rot)  # rotation about the vertical axis fixes j
    conj = compose(compose(R, g), inverse(R))
    assert base_displacement(conj) == pytest.approx(base_displacement(g), rel=1e-9, abs=1e-9)


@given(maps())
@settings(max_examples=60, deadline=None)
def test_list_roundtrip(g):
    assert MoebiusMap.from_list(g.to_list()).close_to(g, 1e-12)


def test_displacement_matches_upper_half_space_distance():
    # independent oracle: Poincare extension of g acting on j, then the
    # half-space distance cosh d = 1 + |p - q|^2 / (2 h_p h_q)
    g = MoebiusMap(1 + 1j, 0.5, 0.2 - 0.3j, 1)
    a, b, c, d = g.a, g.b, g.c, g.d
    # image of j = (0, 1): height 1 / (|c|^2 + |d|^2), horizontal (a conj c + b conj d) / (|c|^2 + |d|^2)
    n = abs(c) ** 2 + abs(d) ** 2
    zi, hi = (a * c.conjugate() + b * d.conjugate()) / n, 1 / n
    dist = math.acosh(1 + (abs(zi) ** 2 + (hi - 1) ** 2) / (2 * hi))
    assert base_displacement(g) == pytest.approx(dist, rel=1e-12)
