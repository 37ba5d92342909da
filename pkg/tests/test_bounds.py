import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleinscat.bounds import (
    asymptotic_coefficient,
    dimension_window,
    f_sigma,
    fsigma_curve,
    invert_bound,
    invert_fsigma,
    nu_of_eps,
    write_curve_csv,
)
from kleinscat.errors import FitInstabilityError, OutOfRangeError


def f_reference(sigma, lam, n=4096):
    # periodic trapezoid rule converges geometrically for this analytic integrand
    t = 2 * np.pi * np.arange(n) / n
    q = lam * np.cos(t) ** 2 + np.sin(t) ** 2 / lam
    return float(np.sum(1 - np.cos(sigma * np.log(q))) * 2 * np.pi / n)


def test_value_at_one():
    for s in (0.5, 1, 2):
        assert f_sigma(s, 1.0) == 0.0


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_monotone_on_grid(sigma):
    c = fsigma_curve(sigma, [1, 1.5, 2, 4, 8])
    assert np.all(np.diff(c.values) > 0)


@given(st.floats(0.1, 3), st.floats(1, 50))
@settings(max_examples=40, deadline=None)
def test_against_trapezoid(sigma, lam):
    assert f_sigma(sigma, lam) == pytest.approx(f_reference(sigma, lam), abs=1e-9)
    assert 0 <= f_sigma(sigma, lam) <= 4 * np.pi


@given(st.floats(0.1, 3), st.floats(1e-3, 1e3))
@settings(max_examples=40, deadline=None)
def test_reciprocal_symmetry(sigma, lam):
    assert f_sigma(sigma, lam) == pytest.approx(f_sigma(sigma, 1 / lam), abs=1e-10)


def test_small_delta_taylor():
    # 1 - cos(d cos 2t) ~ d^2 cos^2(2t) / 2 and int cos^2 2t = pi
    assert f_sigma(1.0, 1.01) == pytest.approx(math.pi / 2 * 1e-4, rel=0.02)


def test_large_lambda_not_monotone():
    assert f_sigma(1.0, 1e3) < f_sigma(1.0, 64.0)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_asymptotic_coefficient(sigma):
    assert asymptotic_coefficient(sigma) == pytest.approx(math.pi / 2, rel=0.01)


def test_fit_instability():
    with pytest.raises(FitInstabilityError):
        asymptotic_coefficient(1.0, deltas=(0.5, 1.0, 3.0))


def test_inversion():
    assert invert_bound(1.0, 0.0) == 0.0
    eps = [0.001, 0.01, 0.05, 0.1]
    d = [invert_bound(1.0, e) for e in eps]
    assert np.all(np.diff(d) > 0)
    ratios = [x / e for x, e in zip(d, eps)]
    # leading order delta = eps * sqrt(2 sigma^2 / (C sigma^2)) = (2 / sqrt(pi)) eps
    assert ratios[0] == pytest.approx(2 / math.sqrt(math.pi), rel=1e-3)
    assert abs(ratios[0] - 2 / math.sqrt(math.pi)) < abs(ratios[-1] - 2 / math.sqrt(math.pi))


@given(st.floats(1e-4, 1.0), st.sampled_from([0.5, 1.0, 2.0]))
@settings(max_examples=30, deadline=None)
def test_roundtrip(delta, sigma):
    assert invert_fsigma(sigma, f_sigma(sigma, 1 + delta)) == pytest.approx(delta, abs=1e-8)


def test_out_of_range():
    with pytest.raises(OutOfRangeError) as info:
        invert_fsigma(1.0, 20.0)
    assert 0 < info.value.ceiling <= 4 * math.pi


def test_window_examples():
    w = dimension_window(1.0, 0.7)
    assert (w.lower, w.upper) == (0.7, 0.7)
    w = dimension_window(2.0, 1.0)
    assert w.lower == pytest.approx(0.4, abs=1e-12)
    assert w.upper == pytest.approx(4 / 3, abs=1e-12)
    with pytest.raises(ValueError):
        dimension_window(0.5, 1.0)


@given(st.floats(1, 10), st.floats(1, 10), st.floats(0, 2))
@settings(max_examples=60, deadline=None)
def test_window_monotone_in_K(K1, K2, D):
    K1, K2 = sorted((K1, K2))
    a, b = dimension_window(K1, D), dimension_window(K2, D)
    assert a.lower <= a.upper + 1e-15
    assert b.lower <= a.lower + 1e-12 and b.upper >= a.upper - 1e-12
    assert a.lower <= D + 1e-12 <= a.upper + 2e-12


def test_nu_decreasing():
    nus = [nu_of_eps(1.0, e, 1.0) for e in (0.2, 0.1, 0.05, 0.025)]
    assert np.all(np.diff(nus) < 0)


def test_curve_csv(tmp_path):
    c = fsigma_curve(1.0, [1, 2, 4])
    write_curve_csv(c, tmp_path / "f.csv", ["test"])
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "# test" and lines[1] == "lambda,f_sigma"
    assert float(lines[3].split(",")[1]) == c.values[1]
