import numpy as np
import pytest

from designreg import (
    BinaryPotentialOutcomes,
    CompleteRandomization,
    FinitePopulation,
    FixedSizeSRS,
)
from designreg.population import intercept_only

Y1 = [1.0, 2.0, 3.0, 4.0]
Y0 = [0.0, 0.0, 0.0, 2.0]


@pytest.fixture
def small_table():
    return BinaryPotentialOutcomes(Y1, Y0)


@pytest.fixture
def small_population(small_table):
    return FinitePopulation(small_table, intercept_only(4), FixedSizeSRS(2), CompleteRandomization(2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_binary_population(rng, n=None):
    """A random small science table with n in [4, 10]."""
    n = int(rng.integers(4, 11)) if n is None else n
    y1 = np.round(rng.normal(1.0, 2.0, n), 3)
    y0 = np.round(rng.normal(0.0, 1.5, n), 3)
    return BinaryPotentialOutcomes(y1, y0)
