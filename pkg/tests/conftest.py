from fractions import Fraction

import pytest

from app.services.distribution_service import DistributionService
from app.services.expansion_service import ExpansionService
from app.services.mset_service import MSetService
from app.services.partition_service import (
    DyadicGenerator,
    GeometricGenerator,
    LurothGenerator,
    PartitionService,
    TableGenerator,
    TwoPeriodicGenerator,
)


@pytest.fixture
def partition_service():
    return PartitionService()


@pytest.fixture
def expansion_service():
    return ExpansionService()


@pytest.fixture
def distribution_service():
    return DistributionService()


@pytest.fixture
def mset_service():
    return MSetService()


@pytest.fixture
def luroth(partition_service):
    return partition_service.make_partition(LurothGenerator())


@pytest.fixture
def dyadic(partition_service):
    return partition_service.make_partition(DyadicGenerator())


@pytest.fixture
def geometric_04(partition_service):
    return partition_service.make_partition(GeometricGenerator(Fraction(2, 5)))


@pytest.fixture
def geometric_03(partition_service):
    return partition_service.make_partition(GeometricGenerator(Fraction(3, 10)))


@pytest.fixture
def example_one(partition_service):
    """Ratios alternate 3/5, 5/6."""
    return partition_service.make_partition(TwoPeriodicGenerator(Fraction(3, 5), Fraction(1, 2)))


@pytest.fixture
def example_two(partition_service):
    return partition_service.make_partition(TwoPeriodicGenerator(Fraction(21, 40), Fraction(1, 3)))


@pytest.fixture
def example_three(partition_service):
    return partition_service.make_partition(TwoPeriodicGenerator(Fraction(1, 3), Fraction(1, 4)))


@pytest.fixture
def slow_start_table(partition_service):
    """t = 1, 9/10, then ratio 3/10: an overlap at the top level only."""
    return partition_service.make_partition(TableGenerator([Fraction(1), Fraction(9, 10)], Fraction(3, 10)))
