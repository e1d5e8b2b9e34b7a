from typing import Tuple

import pytest
from numpy.polynomial import Polynomial

from app.errors import DomainError
from app.models import ConditionStatus, Sign, Verdict
from app.services.partition_service import LurothGenerator

TOL = 1e-12


def _condition(classification, name):
    return next(c for c in classification.conditions if c.name == name)


def test_luroth_is_union_of_eight_intervals(mset_service, luroth):
    """The rational-g bound and the exact G signs give FiniteUnion(8) from n = 3."""
    classification = mset_service.classify(luroth, 3, TOL)
    assert classification.verdict == Verdict.FINITE_UNION
    assert classification.count == 8
    assert classification.from_index == 3

    bound = _condition(classification, "rational g bound")
    assert bound.status == ConditionStatus.HOLDS
    assert bound.from_index == 7
    assert bound.sign == Sign.NEGATIVE
    # the scan reaches the certificate index
    assert classification.probe_depth == 7
    assert [gap.sign.value for gap in classification.gaps[:7]] == ["+", "+", "+", "-", "-", "-", "-"]


def test_luroth_golden_ratio_condition(mset_service, luroth):
    """Consecutive interval lengths eventually shrink by less than the golden ratio."""
    classification = mset_service.classify(luroth, 8, TOL)
    assert classification.golden_ratio_from is not None
    assert classification.golden_ratio_from >= classification.from_index


def test_dyadic_is_one_interval(mset_service, dyadic):
    """Vanishing gaps make 𝓜 a single interval."""
    classification = mset_service.classify(dyadic, 4, TOL)
    assert classification.verdict == Verdict.FINITE_UNION
    assert classification.count == 1
    assert classification.from_index == 0
    assert all(gap.sign == Sign.ZERO for gap in classification.gaps)
    assert classification.golden_ratio_from is None


def test_example_one_is_one_interval(mset_service, example_one):
    """Negative gaps at every level give FiniteUnion(1)."""
    classification = mset_service.classify(example_one, 6, TOL)
    assert classification.verdict == Verdict.FINITE_UNION
    assert classification.count == 1
    assert _condition(classification, "periodic self-similarity").status == ConditionStatus.HOLDS


@pytest.mark.parametrize("name", ["example_two", "example_three"])
def test_alternating_gaps_undetermined(mset_service, request, name):
    """Gap signs alternating forever leave the structure undetermined."""
    classification = mset_service.classify(request.getfixturevalue(name), 6, TOL)
    assert classification.verdict == Verdict.UNDETERMINED
    assert classification.count is None
    assert _condition(classification, "periodic self-similarity").status == ConditionStatus.FAILS
    signs = [gap.sign for gap in classification.gaps]
    assert signs[0] == Sign.POSITIVE
    assert signs[1] == Sign.NEGATIVE


@pytest.mark.parametrize("name", ["geometric_03", "geometric_04"])
def test_small_ratio_geometric_is_homogeneous_cantor(mset_service, request, name):
    """Constant ratios below 1/2 give a homogeneous Cantor set."""
    classification = mset_service.classify(request.getfixturevalue(name), 4, TOL)
    assert classification.verdict == Verdict.HOMOGENEOUS_CANTOR
    assert classification.from_index == 0
    assert _condition(classification, "small ratio positive").status == ConditionStatus.HOLDS


def test_slow_start_table_is_cantor(mset_service, slow_start_table):
    """An overlap at the top level only still leaves a Cantor set."""
    classification = mset_service.classify(slow_start_table, 4, TOL)
    assert classification.verdict == Verdict.CANTOR
    assert classification.from_index == 1
    assert classification.gaps[0].sign == Sign.NEGATIVE
    assert _condition(classification, "sqrt2 - 1").from_index == 1


def test_ratio_diagnostic_length(mset_service, example_one):
    """One diagnostic value per scanned level."""
    classification = mset_service.classify(example_one, 5, TOL)
    assert len(classification.ratio_diagnostic) == classification.probe_depth


def test_probe_depth_must_be_positive(mset_service, luroth):
    """At least one level is scanned."""
    with pytest.raises(DomainError):
        mset_service.classify(luroth, 0, TOL)


class _WideCoefficientLuroth(LurothGenerator):
    """Lüroth with g written as 2^40 / (2^41 k^2 (k+1)^2)."""

    def g_rational(self) -> Tuple[Polynomial, Polynomial]:
        return Polynomial([2.0**40]), Polynomial([0, 0, 2, 4, 2]) * 2.0**40


def test_rational_g_bound_refuses_inexact_floats(mset_service, partition_service):
    """Coefficients past 2^53 give no certificate instead of a rounded one."""
    partition = partition_service.make_partition(_WideCoefficientLuroth())
    bound = _condition(mset_service.classify(partition, 3, TOL), "rational g bound")
    assert bound.status == ConditionStatus.FAILS
    assert bound.from_index is None
    assert "exact float range" in bound.detail
