from fractions import Fraction

import mpmath
import pytest

from app.errors import ConfigError, PartitionError
from app.models import GeneratorKind, RhoBehaviour
from app.numerics import WORKING_DPS
from app.services.partition_service import (
    ClosedFormGenerator,
    GeometricGenerator,
    TableGenerator,
    TwoPeriodicGenerator,
)


def test_luroth_points(luroth):
    """Lüroth partition points are 1/n."""
    assert luroth.t(1) == 1
    assert luroth.t(4) == Fraction(1, 4)
    assert luroth.a(2) == Fraction(1, 6)
    assert luroth.rho(5) == Fraction(5, 6)
    assert luroth.exact


def test_geometric_points(geometric_04):
    """Geometric(0.4) has t_3 = 0.16 and a_2 = 0.24 exactly."""
    assert geometric_04.t(3) == Fraction(4, 25)
    assert geometric_04.a(2) == Fraction(6, 25)


def test_two_periodic_ratios(example_one):
    """Ratios alternate between even and ratio / even."""
    assert example_one.t(2) == Fraction(3, 5)
    assert example_one.rho(3) == Fraction(3, 5)
    assert example_one.rho(4) == Fraction(5, 6)


def test_index_below_one_rejected(luroth):
    """Partition indices start at 1."""
    with pytest.raises(IndexError):
        luroth.t(0)


def test_locate_half_open_rule(luroth, dyadic):
    """Endpoints t_n belong to A_n = (t_{n+1}, t_n]."""
    assert luroth.locate(Fraction(1)) == 1
    assert luroth.locate(Fraction(1, 3)) == 3
    assert luroth.locate(Fraction(3, 10)) == 3
    assert luroth.locate_float(0.3) == 3
    assert dyadic.locate(Fraction(1, 2)) == 2
    assert dyadic.locate(Fraction(3, 8)) == 2
    assert dyadic.locate_float(0.2) == 3


def test_invalid_geometric_ratio(partition_service):
    """Ratios outside (0, 1) do not define a partition."""
    with pytest.raises(PartitionError):
        GeometricGenerator(Fraction(3, 2))
    with pytest.raises(PartitionError):
        TwoPeriodicGenerator(Fraction(1, 4), Fraction(1, 2))


def test_table_must_decrease(partition_service):
    """A table that is not strictly decreasing is rejected."""
    with pytest.raises(PartitionError):
        partition_service.make_partition(TableGenerator([Fraction(1), Fraction(1, 2), Fraction(3, 4)], Fraction(1, 2)))


def test_table_must_start_at_one(partition_service):
    """t_1 must equal 1."""
    with pytest.raises(PartitionError):
        partition_service.make_partition(TableGenerator([Fraction(1, 2)], Fraction(1, 2)))


def test_tail_stats_two_periodic(partition_service, example_one):
    """Periodic ratios give certified sup and inf."""
    stats = partition_service.tail_stats(example_one, 0)
    assert stats.certified
    assert stats.m_k == pytest.approx(0.6)
    assert stats.s_k == pytest.approx(5 / 6)
    assert stats.behaviour == RhoBehaviour.PERIODIC


def test_tail_stats_luroth_uncertified(partition_service, luroth):
    """Lüroth ratios increase to 1, so the sup is only sampled."""
    stats = partition_service.tail_stats(luroth, 5)
    assert not stats.certified
    assert stats.m_k == pytest.approx(6 / 7)
    assert stats.s_k < 1


def test_tail_stats_table_switches_to_tail_ratio(partition_service, slow_start_table):
    """Past the explicit values only the tail ratio remains."""
    head = partition_service.tail_stats(slow_start_table, 0)
    tail = partition_service.tail_stats(slow_start_table, 1)
    assert head.s_k == pytest.approx(0.9)
    assert tail.s_k == pytest.approx(0.3)
    assert tail.m_k == pytest.approx(0.3)


def test_tail_horizon_must_exceed_k(partition_service, luroth):
    """The sampling horizon lies beyond k."""
    with pytest.raises(ValueError):
        partition_service.tail_bounds(luroth, 10, 10)


def test_closed_form_generator(partition_service):
    """Arbitrary functions build inexact partitions with opaque ratio tails."""
    partition = partition_service.make_partition(ClosedFormGenerator(lambda n: 1 / n**2, "inverse-square"))
    assert not partition.exact
    assert float(partition.t(3)) == pytest.approx(1 / 9)
    stats = partition_service.tail_stats(partition, 2, 50)
    assert not stats.certified
    assert stats.behaviour == RhoBehaviour.OPAQUE


def test_parse_argument_shorthands(partition_service):
    """CLI shorthands read decimals exactly."""
    geometric = partition_service.make_partition(partition_service.parse_argument("geometric:0.4"))
    assert geometric.t(2) == Fraction(2, 5)

    periodic = partition_service.parse_argument("two-periodic:3/5:1/2")
    assert periodic.kind == GeneratorKind.TWO_PERIODIC
    assert partition_service.make_partition(periodic).t(4) == Fraction(3, 10)

    table = partition_service.make_partition(partition_service.parse_argument("table:1,0.9:0.3"))
    assert table.t(3) == Fraction(27, 100)

    assert partition_service.parse_argument("luroth").kind == GeneratorKind.LUROTH


def test_parse_argument_unknown(partition_service):
    """Unknown names are configuration errors."""
    with pytest.raises(ConfigError):
        partition_service.parse_argument("fibonacci")


def test_from_json_documents(partition_service):
    """JSON configs use the generator key."""
    config = partition_service.from_json('{"generator": {"geometric": 0.4}}')
    assert config.kind == GeneratorKind.GEOMETRIC
    assert partition_service.make_partition(config).t(2) == Fraction(2, 5)

    config = partition_service.from_json({"generator": {"two_periodic": {"even": "21/40", "ratio": "1/3"}}})
    assert partition_service.make_partition(config).t(2) == Fraction(21, 40)

    config = partition_service.from_json({"generator": {"table": [1, 0.9], "tail_ratio": 0.3}})
    assert config.values == ["1", "0.9"]


def test_from_json_malformed(partition_service):
    """Malformed documents raise ConfigError."""
    with pytest.raises(ConfigError):
        partition_service.from_json("{not json")
    with pytest.raises(ConfigError):
        partition_service.from_json({"generator": {"spiral": 2}})


def test_load_config_file(partition_service, tmp_path):
    """Partition configs load from JSON files."""
    path = tmp_path / "partition.json"
    path.write_text('{"generator": "dyadic"}')
    assert partition_service.load_config(path).kind == GeneratorKind.DYADIC
    with pytest.raises(ConfigError):
        partition_service.load_config(tmp_path / "missing.json")


def test_invalid_number_in_config(partition_service):
    """Unreadable numbers surface as PartitionError."""
    config = partition_service.parse_argument("geometric:abc")
    with pytest.raises(PartitionError):
        partition_service.make_partition(config)


def test_configured_precision_sets_working_digits(partition_service, luroth):
    """A precision above the default raises mpmath's digits while the partition is in use."""
    config = partition_service.from_json('{"generator": "luroth", "precision": 60}')
    partition = partition_service.make_partition(config)
    assert partition.precision == 60
    assert partition.describe().precision == 60
    with partition.working_precision():
        assert mpmath.mp.dps == max(WORKING_DPS, 70)
    assert mpmath.mp.dps == WORKING_DPS
    with luroth.working_precision():
        assert mpmath.mp.dps == WORKING_DPS
