import numpy as np
import pytest

from crystalflow import (
    FlowParams,
    build_curve,
    regular_polygon_anisotropy,
    square_anisotropy,
)


@pytest.fixture(scope="session")
def a4():
    return square_anisotropy()


@pytest.fixture(scope="session")
def a6():
    return regular_polygon_anisotropy(6)


@pytest.fixture()
def p1():
    return FlowParams(alpha=1.0)


@pytest.fixture()
def rect(a4):
    # convex, admissible, not a Wulff square (unequal sides)
    return build_curve(a4, [(-1.8, 1.2), (1.8, 1.2), (1.8, -1.2), (-1.8, -1.2)],
                       "closed")


@pytest.fixture()
def lshape(a4):
    # nonconvex closed hexagonal curve (one concave corner)
    return build_curve(a4, [(0, 0), (4, 0), (4, 2), (2, 2), (2, 6), (0, 6)],
                       "closed")


def wulff_curve(a, scale=1.0):
    return build_curve(a, scale * np.asarray(a.vertices), "closed")


@pytest.fixture()
def wulff2(a4):
    return wulff_curve(a4, 2.0)
