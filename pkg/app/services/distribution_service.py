import logging
from fractions import Fraction
from itertools import chain
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.errors import DomainError
from app.models import BoundedValue, RhoBehaviour, SignSpec
from app.numerics import MAX_SERIES_TERMS, Enclosure, Scalar, coerce, exact, to_mpf
from app.services.expansion_service import ExpansionService
from app.services.partition_service import Partition
from app.services.series_service import SeriesService, TermKind

logger = logging.getLogger(__name__)


class DistributionService:
    """Service for the limit law of θ_n: F_ε, M_ε and the gap functionals g, G, I."""

    def __init__(self):
        self.series = SeriesService()
        self.expansion = ExpansionService()

    # Term functions
    def f_term(self, partition: Partition, n: int, b: int, z: object) -> Scalar:
        """f_n^b(z) = a_n when a_n / t_{n+1-b} < z, else t_{n+1-b} * z."""
        level = self._level(partition, z)
        return self._f(partition, n, b, level)

    def _f(self, partition: Partition, n: int, b: int, z: Scalar) -> Scalar:
        endpoint = partition.t(n + 1 - b)
        width = partition.a(n)
        # ties go to the linear branch, where both branches agree
        if width < endpoint * z:
            return width
        return endpoint * z

    def _level(self, partition: Partition, z: object) -> Scalar:
        if partition.exact:
            level = exact(z)
        else:
            level = to_mpf(exact(z) if isinstance(z, str) else z)
        if not 0 < level <= 1:
            raise DomainError(f"z must lie in (0, 1], got {z}")
        return level

    def m_term(self, partition: Partition, n: int, b: int) -> Scalar:
        """Integral of f_n^b over [0, 1]."""
        endpoint = partition.t(n + 1 - b)
        width = partition.a(n)
        if width <= endpoint:
            return width - width * width / (2 * endpoint)
        return endpoint / 2

    def g(self, partition: Partition, k: int) -> Scalar:
        """g(k) = m_term(k, 1) - m_term(k, 0), in closed form."""
        upper, lower = partition.t(k), partition.t(k + 1)
        if 2 * lower <= upper:
            return upper / 2 - lower / 2 - lower * lower / (2 * upper)
        return upper * upper / (2 * lower) - lower * lower / (2 * upper) + 3 * lower / 2 - 3 * upper / 2

    # Series over sign sequences
    def _signed_sum(
        self,
        partition: Partition,
        eps: SignSpec,
        term: Callable[[int, int], Scalar],
        kinds: Callable[[int], Optional[TermKind]],
        remainder: Callable[[int], Scalar],
        tol: float,
        bits: Optional[List[int]] = None,
    ) -> Enclosure:
        """Sum of term(n, ε_n) over n >= 1, restricted to the given bits when bits is set."""
        total = Enclosure(Fraction(0))
        for n, char in enumerate(eps.prefix, start=1):
            bit = int(char)
            if bits is None or bit in bits:
                total = total + term(n, bit)

        pattern, first = eps.tail_pattern()
        step = len(pattern)
        share = tol / step
        for offset, bit in enumerate(pattern):
            if bits is not None and bit not in bits:
                continue
            total = total + self.series.progression_sum(
                partition,
                lambda n, bit=bit: term(n, bit),
                first + offset,
                step,
                share,
                remainder,
                kinds(bit),
            )
        return total

    # F
    def cdf_enclosure(self, partition: Partition, eps: SignSpec, z: object, tol: float) -> Enclosure:
        self._check_tol(tol)
        if z == 0:
            return Enclosure(Fraction(0))
        level = self._level(partition, z)

        saturation = self._saturation_route(partition, level)
        if saturation is not None:
            return self._saturated_cdf(partition, eps, level, *saturation)

        return self._signed_sum(
            partition,
            eps,
            lambda n, bit: self._f(partition, n, bit, level),
            lambda bit: None,
            partition.t,
            tol,
        )

    def cdf(self, partition: Partition, eps: SignSpec, z: object, tol: float) -> BoundedValue:
        """F_ε(z) with a certified truncation radius."""
        return self.cdf_enclosure(partition, eps, z, tol).to_model()

    def _saturation_route(self, partition: Partition, level: Scalar) -> Optional[Tuple[int, int, int]]:
        """(start, J, K) when rho_n is certified increasing from `start` with a limit above 1 / (1 + z).

        For start <= n < J both branches of f_n are linear (rho_n <= 1 - z); from K on f_n = a_n for
        both signs (rho_n > 1 / (1 + z)), so the tail sums to t_K exactly.
        """
        if partition.self_similarity() is not None:
            return None
        profile = partition.rho_profile()
        if profile.behaviour != RhoBehaviour.INCREASING or profile.limit is None:
            return None
        (saturated, linear, limit) = coerce(1 / (1 + level), 1 - level, profile.limit)
        if limit <= saturated:
            return None

        linear_end = self._first_ratio_above(partition, linear, profile.start)
        saturation = self._first_ratio_above(partition, saturated, linear_end)
        if saturation - linear_end > MAX_SERIES_TERMS:
            logger.debug(f"{saturation - linear_end} mixed terms below the saturation index, z={float(level)}")
            return None
        return profile.start, linear_end, saturation

    def _first_ratio_above(self, partition: Partition, threshold: Scalar, start: int) -> int:
        """First n >= start with rho_n > threshold, for rho_n increasing from start."""
        if partition.rho(start) > threshold:
            return start
        width = 1
        while not partition.rho(start + width) > threshold:
            width *= 2
        low, high = start + width // 2, start + width
        while high - low > 1:
            middle = (low + high) // 2
            if partition.rho(middle) > threshold:
                high = middle
            else:
                low = middle
        return high

    def _saturated_cdf(
        self, partition: Partition, eps: SignSpec, level: Scalar, start: int, linear_end: int, saturation: int
    ) -> Enclosure:
        total = Enclosure(partition.t(saturation))
        for n in chain(range(1, start), range(linear_end, saturation)):
            total = total + self._f(partition, n, eps.bit(n), level)
        return total + self._endpoint_sum(partition, eps, start, linear_end) * level

    def _endpoint_sum(self, partition: Partition, eps: SignSpec, lo: int, hi: int) -> Enclosure:
        """Sum of t_{n+1-ε_n} over lo <= n < hi."""
        total = Enclosure(Fraction(0))
        pattern, first = eps.tail_pattern()
        for n in range(lo, min(hi, first)):
            total = total + partition.t(n + 1 - eps.bit(n))

        step = len(pattern)
        begin = max(lo, first)
        for offset, bit in enumerate(pattern):
            n = first + offset
            if n < begin:
                n += -(-(begin - n) // step) * step
            total = total + self.series.progression_range(
                partition, partition.t, n + 1 - bit, step, hi + 1 - bit, TermKind.T
            )
        return total

    # M
    def mean_enclosure(self, partition: Partition, eps: SignSpec, tol: float) -> Enclosure:
        self._check_tol(tol)
        base = self.mean_all_zero(partition, tol / 2)
        ones = self._signed_sum(
            partition,
            eps,
            lambda n, bit: self.g(partition, n),
            lambda bit: TermKind.G,
            lambda n: partition.t(n) / 2,
            tol / 2,
            bits=[1],
        )
        return base - ones

    def mean(self, partition: Partition, eps: SignSpec, tol: float) -> BoundedValue:
        """M_ε = 1 - sum of m_term(n, ε_n), as M_{0̄} minus g(n) over the indices with ε_n = 1."""
        return self.mean_enclosure(partition, eps, tol).to_model()

    def mean_all_zero(self, partition: Partition, tol: float) -> Enclosure:
        total = self.series.progression_sum(
            partition, lambda n: self.m_term(partition, n, 0), 1, 1, tol, partition.t, TermKind.M0
        )
        return 1 - total

    # G and I
    def gap_enclosure(self, partition: Partition, n: int, tol: float) -> Enclosure:
        self._check_tol(tol)
        if n < 0:
            raise DomainError(f"n must be nonnegative, got {n}")
        return Enclosure(self.g(partition, n + 1)) - self._g_tail(partition, n + 2, tol)

    def gap(self, partition: Partition, n: int, tol: float) -> BoundedValue:
        """G(n) = g(n+1) - sum_{k >= n+2} g(k)."""
        return self.gap_enclosure(partition, n, tol).to_model()

    def length_enclosure(self, partition: Partition, n: int, tol: float) -> Enclosure:
        self._check_tol(tol)
        if n < 0:
            raise DomainError(f"n must be nonnegative, got {n}")
        return self._g_tail(partition, n + 1, tol)

    def interval_length(self, partition: Partition, n: int, tol: float) -> BoundedValue:
        """I(n) = sum_{k >= n+1} g(k), the common length of the depth-n intervals."""
        return self.length_enclosure(partition, n, tol).to_model()

    def _g_tail(self, partition: Partition, start: int, tol: float) -> Enclosure:
        return self.series.progression_sum(
            partition, lambda k: self.g(partition, k), start, 1, tol, lambda k: partition.t(k) / 2, TermKind.G
        )

    def _check_tol(self, tol: float) -> None:
        if not tol > 0:
            raise DomainError(f"tol must be positive, got {tol}")

    # Monte Carlo counterparts
    def empirical_cdf(
        self,
        partition: Partition,
        eps: SignSpec,
        z_grid: List[float],
        n_iter: int,
        seed: int,
        x0: Optional[float] = None,
    ) -> List[float]:
        """Fraction of θ_1..θ_N below each z along one seeded orbit."""
        thetas = np.sort(self.expansion.orbit_thetas(partition, eps, n_iter, seed, x0))
        below = np.searchsorted(thetas, np.asarray(z_grid, dtype=float), side="left")
        return [float(count) / n_iter for count in below]

    def empirical_mean(
        self, partition: Partition, eps: SignSpec, n_iter: int, seed: int, x0: Optional[float] = None
    ) -> float:
        """Average of θ_1..θ_N along one seeded orbit."""
        return float(np.mean(self.expansion.orbit_thetas(partition, eps, n_iter, seed, x0)))

