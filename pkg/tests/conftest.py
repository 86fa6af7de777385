from __future__ import annotations

import numpy as np
import pytest

from lightcone.chart import builtin


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def euclid2():
    return builtin("euclidean", 2)


@pytest.fixture(scope="session")
def hs1():
    return builtin("hyperbolic_sphere_product", 1)


@pytest.fixture(scope="session")
def sphere2():
    return builtin("round_sphere", 2)


@pytest.fixture(scope="session")
def unit_square():
    return np.array([[0.0, 1.0], [0.0, 1.0]])
