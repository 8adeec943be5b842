from fractions import Fraction

import pytest

from slopelab import build_tent_system, concentric_test

TARGET = (Fraction(1, 3), Fraction(1, 3))


@pytest.fixture(scope="session")
def toy_test():
    return concentric_test(TARGET, scale_step=2)


@pytest.fixture(scope="session")
def toy_system5(toy_test):
    return build_tent_system(toy_test, depth=5, cutoff=0, budget=4)


@pytest.fixture(scope="session")
def toy_system8(toy_test):
    return build_tent_system(toy_test, depth=8, cutoff=0, budget=4)
