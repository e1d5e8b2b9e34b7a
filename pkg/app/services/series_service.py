import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional, Tuple, TYPE_CHECKING

import mpmath
from mpmath import mpf

from app.errors import TruncationError
from app.numerics import MAX_SERIES_TERMS, Enclosure, Scalar, coerce, to_mpf

if TYPE_CHECKING:
    from app.services.partition_service import Partition

logger = logging.getLogger(__name__)

# finite sums up to this length stay explicit, and exact on rational partitions
EXPLICIT_RANGE_TERMS = 4096


class TermKind(str, Enum):
    A = "a"  # a_n
    G = "g"  # g(n)
    M0 = "m0"  # m_term(n, 0)
    T = "t"  # t_n


@dataclass(frozen=True)
class SelfSimilarity:
    """t_{n+period} = ratio * t_n for every n >= start."""

    start: int
    period: int
    ratio: Scalar


@dataclass(frozen=True)
class PartialFractions:
    """A term n -> sum of coef / (n + shift) ** power, power in {1, 2}."""

    terms: Tuple[Tuple[int, int, Fraction], ...]

    def __call__(self, n: int) -> Fraction:
        return sum((coef / Fraction(n + shift) ** power for shift, power, coef in self.terms), Fraction(0))

    def progression_tail(self, start: int, step: int) -> mpf:
        """Closed form of sum_{j >= 0} term(start + j * step)."""
        simple = sum((coef for _, power, coef in self.terms if power == 1), Fraction(0))
        if simple != 0:
            raise ValueError("simple-pole coefficients must cancel for the tail to converge")
        total = mpf(0)
        for shift, power, coef in self.terms:
            offset = mpf(start + shift) / step
            match power:
                case 2:
                    total += to_mpf(coef) * mpmath.zeta(2, offset) / step**2
                case 1:
                    total -= to_mpf(coef) * mpmath.digamma(offset) / step
                case _:
                    raise ValueError(f"unsupported pole order {power}")
        return total

    def progression_range(self, start: int, step: int, count: int) -> mpf:
        """Closed form of sum_{j < count} term(start + j * step); simple poles need not cancel."""
        total = mpf(0)
        for shift, power, coef in self.terms:
            first = mpf(start + shift) / step
            last = first + count
            match power:
                case 2:
                    total += to_mpf(coef) * (mpmath.zeta(2, first) - mpmath.zeta(2, last)) / step**2
                case 1:
                    total += to_mpf(coef) * (mpmath.digamma(last) - mpmath.digamma(first)) / step
                case _:
                    raise ValueError(f"unsupported pole order {power}")
        return total


class SeriesService:
    """Certified evaluation of sums over arithmetic progressions of partition indices."""

    def progression_sum(
        self,
        partition: "Partition",
        term: Callable[[int], Scalar],
        start: int,
        step: int,
        tol: float,
        remainder: Callable[[int], Scalar],
        kind: Optional[TermKind] = None,
    ) -> Enclosure:
        """
        Sum term(n) over n = start, start + step, ...
        `remainder(K)` must bound the sum of the omitted terms with index >= K.
        """
        similarity = partition.self_similarity()
        if similarity is not None:
            return self._self_similar_sum(similarity, term, start, step)

        fractions = partition.partial_fractions(kind) if kind is not None else None
        if fractions is not None:
            return Enclosure(fractions.progression_tail(start, step))

        return self._truncated_sum(partition, term, start, step, tol, remainder)

    def progression_range(
        self,
        partition: "Partition",
        term: Callable[[int], Scalar],
        start: int,
        step: int,
        stop: int,
        kind: Optional[TermKind] = None,
    ) -> Enclosure:
        """Finite sum of term(n) over n = start, start + step, ... below stop."""
        count = max(0, -(-(stop - start) // step))
        fractions = partition.partial_fractions(kind) if kind is not None else None
        if count > EXPLICIT_RANGE_TERMS and fractions is not None:
            logger.debug(f"Closed form for {count} terms from index {start}")
            return Enclosure(fractions.progression_range(start, step, count))
        if count > MAX_SERIES_TERMS:
            raise TruncationError(f"{count} explicit terms from index {start} exceed {MAX_SERIES_TERMS}")

        total: Scalar = Fraction(0)
        for n in range(start, stop, step):
            (total, value) = coerce(total, term(n))
            total += value
        return Enclosure(total)

    def _self_similar_sum(
        self, similarity: SelfSimilarity, term: Callable[[int], Scalar], start: int, step: int
    ) -> Enclosure:
        total: Scalar = Fraction(0)
        n = start
        while n < similarity.start:
            (total, value) = coerce(total, term(n))
            total += value
            n += step

        # blocks of lcm(step, period) indices repeat up to the factor ratio ** (block / period)
        block = math.lcm(step, similarity.period)
        (factor,) = coerce(similarity.ratio ** (block // similarity.period))
        for first in range(n, n + block, step):
            (total, value, scale) = coerce(total, term(first), factor)
            total += value / (1 - scale)
        return Enclosure(total)

    def _truncated_sum(
        self,
        partition: "Partition",
        term: Callable[[int], Scalar],
        start: int,
        step: int,
        tol: float,
        remainder: Callable[[int], Scalar],
    ) -> Enclosure:
        cutoff = self.cutoff(remainder, start, tol)
        if (cutoff - start) // step > MAX_SERIES_TERMS:
            raise TruncationError(
                f"tolerance {tol:g} needs {(cutoff - start) // step} terms, more than {MAX_SERIES_TERMS}"
            )
        logger.debug(f"Truncating series from index {start} at K={cutoff}")

        total: Scalar = Fraction(0)
        for n in range(start, cutoff, step):
            (total, value) = coerce(total, term(n))
            total += value
        return Enclosure(total, remainder(cutoff))

    def cutoff(self, remainder: Callable[[int], Scalar], start: int, tol: float) -> int:
        """Smallest K >= start with remainder(K) <= tol (remainder is nonincreasing)."""
        if remainder(start) <= tol:
            return start
        width = 1
        while remainder(start + width) > tol:
            width *= 2
            if width > 4 * MAX_SERIES_TERMS:
                raise TruncationError(f"tolerance {tol:g} is out of reach within {MAX_SERIES_TERMS} terms")
        low, high = start + width // 2, start + width
        while high - low > 1:
            middle = (low + high) // 2
            if remainder(middle) <= tol:
                high = middle
            else:
                low = middle
        return high
