import math

import pytest

from deltacone.bs_operator import build_grid
from deltacone.geometry import Cone, make_circle, make_perturbed_loop

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def great_circle():
    return make_circle(TWO_PI)


@pytest.fixture(scope="session")
def circle_pi():
    return make_circle(math.pi)


@pytest.fixture(scope="session")
def wavy_pi():
    """eps = 0.1, k = 2 loop of length pi."""
    return make_perturbed_loop(math.pi, 0.1, 2)


@pytest.fixture(scope="session")
def disk(great_circle):
    return Cone(1.0, great_circle)


@pytest.fixture(scope="session")
def circle_cone(circle_pi):
    return Cone(1.0, circle_pi)


@pytest.fixture(scope="session")
def wavy_cone(wavy_pi):
    return Cone(1.0, wavy_pi)


@pytest.fixture(scope="session")
def disk_grid():
    return build_grid(1.0, TWO_PI, 8, 16, 2.0)


@pytest.fixture(scope="session")
def pi_grid():
    return build_grid(1.0, math.pi, 8, 16, 2.0)
