from fractions import Fraction

import mpmath
import numpy as np
import pytest

from app.errors import DomainError
from app.models import SignSpec
from app.services.partition_service import GeometricGenerator


def test_apply_t_luroth_increasing_branch(expansion_service, luroth):
    """T(0.7) = 0.4 with digit 1 under the all-zero signs."""
    image, digit, sign = expansion_service.apply_T(luroth, SignSpec.all_zero(), "0.7")
    assert image == Fraction(2, 5)
    assert digit == 1
    assert sign == 0


def test_apply_t_dyadic_decreasing_branch(expansion_service, dyadic):
    """T(0.3) = 0.8 with digit 2 under the all-one signs."""
    image, digit, sign = expansion_service.apply_T(dyadic, SignSpec.all_one(), "0.3")
    assert image == Fraction(4, 5)
    assert digit == 2
    assert sign == 1


def test_apply_t_at_zero(expansion_service, luroth):
    """0 is the digit-∞ fixed point."""
    image, digit, sign = expansion_service.apply_T(luroth, SignSpec.all_zero(), 0)
    assert image == 0
    assert digit is None
    assert sign == 0


def test_apply_t_outside_unit_interval(expansion_service, luroth):
    """Points outside [0, 1] are rejected."""
    with pytest.raises(DomainError):
        expansion_service.apply_T(luroth, SignSpec.all_zero(), "1.5")


def test_expand_rejects_zero_steps(expansion_service, luroth):
    """At least one step is required."""
    with pytest.raises(DomainError):
        expansion_service.expand(luroth, SignSpec.all_zero(), "0.5", 0)


def test_expand_luroth_convergents(expansion_service, luroth):
    """x = 1/3 has digits 3, 1, 1, ... and convergents approaching 1/3."""
    trace = expansion_service.expand(luroth, SignSpec.all_zero(), Fraction(1, 3), 4)
    assert [step.d for step in trace.steps] == [3, 1, 1, 1]
    assert trace.steps[0].approx == pytest.approx(0.25)
    assert trace.steps[1].approx == pytest.approx(7 / 24)
    assert abs(trace.steps[-1].approx - 1 / 3) < abs(trace.steps[0].approx - 1 / 3)
    assert not trace.terminated


def test_expand_terminates_at_zero(expansion_service, dyadic):
    """x = 1/2 under decreasing branches lands on 0 after one step."""
    trace = expansion_service.expand(dyadic, SignSpec.all_one(), Fraction(1, 2), 3)
    assert trace.terminated
    assert trace.steps[0].d == 2
    assert trace.steps[0].theta == 0.0
    assert trace.steps[1].d is None
    assert trace.steps[1].q is None
    assert trace.steps[2].approx == pytest.approx(0.5)


@pytest.mark.parametrize("name", ["luroth", "dyadic", "geometric_04"])
@pytest.mark.parametrize("eps", [SignSpec.all_zero(), SignSpec.all_one(), SignSpec.periodic("01")])
def test_theta_identity_on_random_points(expansion_service, request, name, eps):
    """θ_n = a_{d_n} / t_{d_n+1-s_n} · T^n x along 50 steps of 100 random points."""
    partition = request.getfixturevalue(name)
    rng = np.random.default_rng(2024)
    worst = 0.0
    for y in rng.random(100):
        trace = expansion_service.expand(partition, eps, Fraction(float(y)), 50)
        worst = max(worst, expansion_service.theta_identity_check(trace, partition))
        assert all(step.theta >= 0 for step in trace.steps)
    assert worst <= 1e-10


def test_theta_identity_on_inexact_partition(expansion_service, partition_service):
    """The identity also holds with mpmath arithmetic."""
    partition = partition_service.make_partition(GeometricGenerator(mpmath.sqrt(2) - 1))
    trace = expansion_service.expand(partition, SignSpec.periodic("10"), "1/3", 30)
    assert not partition.exact
    assert expansion_service.theta_identity_check(trace, partition) <= 1e-10


def test_reconstruct_matches_convergents(expansion_service, geometric_04):
    """Partial sums rebuilt from digits and signs equal p_n / q_n."""
    eps = SignSpec.periodic("01", prefix="1")
    trace = expansion_service.expand(geometric_04, eps, Fraction(5, 7), 12)
    digits = [step.d for step in trace.steps]
    signs = [step.s for step in trace.steps]
    assert float(expansion_service.reconstruct(geometric_04, digits, signs)) == pytest.approx(trace.steps[-1].approx)


def test_orbit_thetas_reproducible(expansion_service, luroth):
    """Equal seeds give equal orbits."""
    first = expansion_service.orbit_thetas(luroth, SignSpec.all_one(), 500, seed=7)
    second = expansion_service.orbit_thetas(luroth, SignSpec.all_one(), 500, seed=7)
    assert np.array_equal(first, second)
    assert np.all((first >= 0) & (first <= 1))


def test_orbit_thetas_dyadic_does_not_collapse(expansion_service, dyadic):
    """Float orbits of the doubling-type map keep a uniform θ law (mean 1/2)."""
    thetas = expansion_service.orbit_thetas(dyadic, SignSpec.all_zero(), 20000, seed=0)
    assert abs(float(thetas.mean()) - 0.5) < 0.02
    assert float(thetas[-1000:].std()) > 0.2


def test_orbit_thetas_rejects_bad_start(expansion_service, luroth):
    """Starting points must lie strictly inside (0, 1)."""
    with pytest.raises(DomainError):
        expansion_service.orbit_thetas(luroth, SignSpec.all_zero(), 10, seed=0, x0=1.0)


@pytest.mark.parametrize("name", ["luroth", "geometric_04"])
@pytest.mark.parametrize("eps", [SignSpec.all_zero(), SignSpec.all_one(), SignSpec.periodic("01")])
@pytest.mark.parametrize("n", [1, 2])
def test_sample_digits_follow_widths(expansion_service, request, name, eps, n):
    """Lebesgue measure is invariant, so P(d_n = k) = a_k at every n."""
    partition = request.getfixturevalue(name)
    samples = 20000
    digits = expansion_service.sample_digits(partition, eps, n, samples, seed=3)
    for k in range(1, 6):
        width = float(partition.a(k))
        sigma = (width * (1 - width) / samples) ** 0.5
        assert abs(float(np.mean(digits == k)) - width) <= 5 * sigma
