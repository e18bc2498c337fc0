from pathlib import Path

import pytest

from spatial_lab.algebra import Algebra
from spatial_lab.random_instances import rng as named_rng

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def m1() -> Algebra:
    return Algebra.scalar()


@pytest.fixture
def m2() -> Algebra:
    return Algebra.matrix(2)


@pytest.fixture
def c_m2() -> Algebra:
    return Algebra((1, 2))


@pytest.fixture(params=[(1,), (2,), (1, 2)], ids=["M1", "M2", "C+M2"])
def algebra(request) -> Algebra:
    return Algebra(request.param)


@pytest.fixture
def rng(request):
    """A generator seeded by the test name"""
    return named_rng(7, request.node.name)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
