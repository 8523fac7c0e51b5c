import numpy as np
import pytest

from conelab import build_finite, build_grid, scalar_reference

M = [[2.0, 1.0], [1.0, 2.0]]


@pytest.fixture(scope="session")
def sym_reference():
    """Closed-form reference: M = [[2,1],[1,2]], c in {1,2} equiprobable."""
    return scalar_reference(M, [(1.0, 0.5), (2.0, 0.5)])


@pytest.fixture(scope="session")
def asym_reference():
    """Same base with asymmetric scalar weights {0.75, 0.25}."""
    return scalar_reference(M, [(1.0, 0.75), (2.0, 0.25)])


@pytest.fixture(scope="session")
def generic_ensemble():
    """Two genuinely different atoms (non-arithmetic, A1)."""
    return build_finite(2, [[[2.0, 1.0], [1.0, 3.0]], [[1.0, 2.0], [3.0, 1.0]]], [0.5, 0.5])


@pytest.fixture(scope="session")
def point_mass():
    return build_finite(2, [M], [1.0])


@pytest.fixture(scope="session")
def grid256():
    return build_grid(2, 256)


def random_simplex(rng, d=2):
    x = rng.random(d)
    while x.sum() <= 0:
        x = rng.random(d)
    return x / x.sum()
