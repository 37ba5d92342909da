import numpy as np
import pytest

from kleinscat.kleinian import Circle, SchottkyGroup, build_schottky

RECT = (-1.0, 1.0, -1.0, 1.0)


def make_rank1(r=1.0):
    return build_schottky([(Circle(-3, r), Circle(3, r))], rect=RECT)


def make_rank2(r=1.0):
    return build_schottky(
        [(Circle(-3, r), Circle(3, r)), (Circle(-3j, r), Circle(3j, r))], rect=RECT
    )


@pytest.fixture(scope="session")
def rank1():
    return make_rank1()


@pytest.fixture(scope="session")
def rank2():
    return make_rank2()


@pytest.fixture(scope="session")
def trivial():
    return SchottkyGroup.trivial(RECT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
