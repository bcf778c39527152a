import pathlib

import pytest

from closedmarket import ParameterBinding, ParametricFamily, economy

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def soap():
    return economy(
        ["L1", "L2", "L3"], [5, 20, 100], ["mass", "boutique", "household"],
        [[0.5, 0, 0], [0.5, 2, 0], [0.5, 4, 8]],
        [[1.5, 0, 0], [1.5, 2, 0], [0, 2, 1]])


@pytest.fixture(scope="session")
def soap_family(soap):
    return ParametricFamily(soap, (
        ParameterBinding("alpha", 1, 0, 0.2, 5.0, (1, 1.5, 3)),
        ParameterBinding("beta", 2, 1, 0.6, 5.0, (1, 2, 3))))


@pytest.fixture(scope="session")
def two_by_two():
    return economy(["c1", "c2"], [2, 4], ["g1", "g2"],
                   [[0.25, 0], [0.25, 1]], [[1, 1], [1, 1]])


@pytest.fixture(scope="session")
def two_by_two_family(two_by_two):
    return ParametricFamily(two_by_two, (
        ParameterBinding("alpha", 0, 0, 0.01, 3.0, None),
        ParameterBinding("beta", 1, 0, 0.01, 3.0, None)))


@pytest.fixture(scope="session")
def two_class_three_goods():
    return economy(["c1", "c2"], [1, 1], ["a", "b", "c"],
                   [[1, 0.5, 0.8], [0.5, 1.5, 0.9]],
                   [[1, 0.75, 0.8], [0.4, 0.9, 0.7]])


@pytest.fixture(scope="session")
def converging_market():
    return economy(["A", "B", "C"], [1, 1, 1], ["x", "y", "z"],
                   [[1, 0, 2], [3, 4, 0], [0.5, 2.5, 2]],
                   [[1.5, 0.41, 0], [0.58, 1.1, 0.2], [0.5, 1.4, 0.6]])


@pytest.fixture(scope="session")
def cycling_market():
    return economy(["A", "B", "C"], [10, 10, 10], ["x", "y", "z"],
                   [[0.05, 1, 0.9], [0.5, 0.8, 0.15], [0.4, 0.5, 0.4]],
                   [[0.2, 0.3, 0.8], [0.9, 0.2, 0.4], [0.25, 0.85, 0.33]])
