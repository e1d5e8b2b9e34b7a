import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

import mpmath
import numpy as np
from numpy.polynomial import Polynomial

from app.errors import DomainError, VerdictError
from app.models import (
    AmbiguousPair,
    AttainResult,
    Classification,
    ConditionOutcome,
    ConditionStatus,
    DimensionReport,
    DimensionRow,
    GapValue,
    LabeledInterval,
    MergedInterval,
    MSetApprox,
    RhoBehaviour,
    Sign,
    SignSpec,
    Verdict,
)
from app.numerics import Enclosure, Scalar, coerce, exact, round_up, to_mpf
from app.services.distribution_service import DistributionService
from app.services.partition_service import Partition, PartitionService

logger = logging.getLogger(__name__)

MAX_DEPTH = 20
# largest index a tail certificate may start from and still be probed explicitly
PROBE_LIMIT = 64
POLYNOMIAL_SEARCH_LIMIT = 1000
EXACT_FLOAT_LIMIT = 2.0**53
TAIL_HORIZON = 1000
GOLDEN_RATIO = (1 + 5**0.5) / 2

NONPOSITIVE = (Sign.NEGATIVE, Sign.ZERO)


@dataclass
class _Node:
    word: str
    lo: Enclosure
    hi: Enclosure


@dataclass
class _Rendering:
    nodes: List[_Node]
    merged: List[MergedInterval]
    ambiguous: List[AmbiguousPair]


class MSetService:
    """Service for the interval tree I_ω, the structure of 𝓜 and its dimensions."""

    def __init__(self):
        self.distribution = DistributionService()
        self.partitions = PartitionService()

    def interval(self, partition: Partition, word: str, tol: float) -> LabeledInterval:
        """I_ω = [M_{ω1̄}, M_{ω0̄}]."""
        node = self._node(partition, word, tol)
        return LabeledInterval(word=word, lo=node.lo.to_model(), hi=node.hi.to_model())

    def _node(self, partition: Partition, word: str, tol: float) -> _Node:
        lo = self.distribution.mean_enclosure(partition, SignSpec.all_one(word), tol)
        hi = self.distribution.mean_enclosure(partition, SignSpec.all_zero(word), tol)
        return _Node(word, lo, hi)

    # Depth-k rendering
    def mset_approx(self, partition: Partition, depth: int, tol: float) -> MSetApprox:
        """All 2^depth intervals, their certified union and the structure verdict."""
        rendering = self._render(partition, depth, tol)
        return MSetApprox(
            depth=depth,
            intervals=[
                LabeledInterval(word=node.word, lo=node.lo.to_model(), hi=node.hi.to_model())
                for node in rendering.nodes
            ],
            merged=rendering.merged,
            ambiguous=rendering.ambiguous,
            classification=self.classify(partition, max(depth, 1), tol),
        )

    def _render(self, partition: Partition, depth: int, tol: float) -> _Rendering:
        if not 0 <= depth <= MAX_DEPTH:
            raise DomainError(f"depth must lie in [0, {MAX_DEPTH}], got {depth}")
        base = self.distribution.mean_all_zero(partition, tol / 2)
        tail = self.distribution.length_enclosure(partition, depth, tol / 2)

        # M_{ω0̄} = M_{0̄} - sum of g(i) over the positions i with ω_i = 1
        words: List[Tuple[str, Scalar]] = [("", Fraction(0))]
        for k in range(1, depth + 1):
            weight = self.distribution.g(partition, k)
            words = [
                (word + bit, total + weight if bit == "1" else total) for word, total in words for bit in ("0", "1")
            ]

        nodes = []
        for word, ones in words:
            hi = base - ones
            nodes.append(_Node(word, hi - tail, hi))
        merged, ambiguous = self._merge(nodes)
        return _Rendering(nodes, merged, ambiguous)

    def _merge(self, nodes: List[_Node]) -> Tuple[List[MergedInterval], List[AmbiguousPair]]:
        """Union of closed intervals; a pair merges or separates only when the enclosures decide it."""
        order = sorted(nodes, key=lambda node: node.lo.value)
        merged: List[MergedInterval] = []
        ambiguous: List[AmbiguousPair] = []

        current_lo, current_hi, last_word, members = order[0].lo, order[0].hi, order[0].word, 1
        for node in order[1:]:
            separation = node.lo - current_hi
            radius = current_hi.slack + node.lo.slack
            if separation.value <= -radius:
                if node.hi.value > current_hi.value:
                    current_hi = node.hi
                members += 1
                last_word = node.word
                continue
            if not separation.value > radius:
                ambiguous.append(
                    AmbiguousPair(
                        left=last_word,
                        right=node.word,
                        separation=float(separation.value),
                        radius=round_up(radius),
                    )
                )
            merged.append(self._merged(current_lo, current_hi, members))
            current_lo, current_hi, last_word, members = node.lo, node.hi, node.word, 1
        merged.append(self._merged(current_lo, current_hi, members))
        return merged, ambiguous

    def _merged(self, lo: Enclosure, hi: Enclosure, members: int) -> MergedInterval:
        return MergedInterval(
            lo=float(lo.value), hi=float(hi.value), radius=round_up(max(lo.slack, hi.slack)), members=members
        )

    # Structure verdict
    def classify(self, partition: Partition, probe_depth: int, tol: float) -> Classification:
        """Verdict on 𝓜 from certified G signs and tail conditions, with all evidence attached."""
        if probe_depth < 1:
            raise DomainError(f"probe_depth must be at least 1, got {probe_depth}")

        conditions = [
            self._periodicity_condition(partition, tol),
            self._rational_g_condition(partition),
            *self._ratio_conditions(partition, probe_depth),
        ]
        certified = [c for c in conditions if c.status == ConditionStatus.HOLDS and c.from_index is not None]
        nonpositive_from = min((c.from_index for c in certified if c.sign == Sign.NEGATIVE), default=None)
        positive_from = min((c.from_index for c in certified if c.sign == Sign.POSITIVE), default=None)

        depth = max([probe_depth] + [c.from_index for c in certified if c.from_index <= PROBE_LIMIT])
        gaps = [self.distribution.gap_enclosure(partition, n, tol) for n in range(depth + 1)]
        signs = [gap.sign() for gap in gaps]
        gap_values = [
            GapValue(
                n=n,
                g=float(self.distribution.g(partition, n)) if n else None,
                gap=gap.to_model(),
                sign=sign,
            )
            for n, (gap, sign) in enumerate(zip(gaps, signs))
        ]

        verdict, count, start = Verdict.UNDETERMINED, None, None
        if nonpositive_from is not None and nonpositive_from <= depth:
            start = self._walk_down(nonpositive_from, signs, NONPOSITIVE)
            if any(sign == Sign.POSITIVE for sign in signs[start:]):
                logger.warning(f"Probed gap signs contradict the nonpositive tail from n={start}")
                start = None
            else:
                verdict = Verdict.FINITE_UNION
                count = self._union_count(partition, start, tol)
        elif positive_from is not None and positive_from <= depth:
            start = self._walk_down(positive_from, signs, (Sign.POSITIVE,))
            verdict = Verdict.HOMOGENEOUS_CANTOR if start == 0 else Verdict.CANTOR
        elif any(c.name == "ratio limit in [1/2, 1)" and c.status == ConditionStatus.HOLDS for c in conditions):
            verdict = Verdict.FINITE_UNION

        logger.info(f"Classified {partition.kind.value} partition as {verdict.value} (from n={start})")
        lengths = [self.distribution.length_enclosure(partition, n, tol) for n in range(depth + 1)]
        return Classification(
            verdict=verdict,
            count=count,
            from_index=start,
            probe_depth=depth,
            gaps=gap_values,
            conditions=conditions,
            golden_ratio_from=self._golden_ratio_from(lengths, start if verdict == Verdict.FINITE_UNION else 0),
            ratio_diagnostic=[self._ratio_diagnostic(partition, k) for k in range(1, depth + 1)],
        )

    def _walk_down(self, start: int, signs: List[Sign], accepted: Tuple[Sign, ...]) -> int:
        while start > 0 and signs[start - 1] in accepted:
            start -= 1
        return start

    def _union_count(self, partition: Partition, depth: int, tol: float) -> Optional[int]:
        if depth > MAX_DEPTH:
            return None
        rendering = self._render(partition, depth, tol)
        if rendering.ambiguous:
            return None
        return len(rendering.merged)

    def _periodicity_condition(self, partition: Partition, tol: float) -> ConditionOutcome:
        name = "periodic self-similarity"
        similarity = partition.self_similarity()
        if similarity is None:
            return ConditionOutcome(name=name, status=ConditionStatus.NOT_APPLICABLE)

        # G(n + P) = ratio * G(n) once n + 1 >= start, so one period fixes every later sign
        first = max(0, similarity.start - 1)
        block = [self.distribution.gap_enclosure(partition, n, tol).sign() for n in range(first, first + similarity.period)]
        detail = f"signs of G({first}..{first + similarity.period - 1}): {''.join(s.value for s in block)}"
        if Sign.UNDECIDED in block:
            return ConditionOutcome(name=name, status=ConditionStatus.UNCERTIFIED, detail=detail)
        if all(sign == Sign.POSITIVE for sign in block):
            return ConditionOutcome(
                name=name, status=ConditionStatus.HOLDS, from_index=first, sign=Sign.POSITIVE, detail=detail
            )
        if all(sign in NONPOSITIVE for sign in block):
            return ConditionOutcome(
                name=name, status=ConditionStatus.HOLDS, from_index=first, sign=Sign.NEGATIVE, detail=detail
            )
        return ConditionOutcome(name=name, status=ConditionStatus.FAILS, detail=detail + " (mixed)")

    def _rational_g_condition(self, partition: Partition) -> ConditionOutcome:
        name = "rational g bound"
        rational = partition.generator.g_rational()
        if rational is None:
            return ConditionOutcome(name=name, status=ConditionStatus.NOT_APPLICABLE)
        numerator, denominator = rational
        if not all(np.all(poly.coef == np.round(poly.coef)) for poly in rational):
            return ConditionOutcome(name=name, status=ConditionStatus.NOT_APPLICABLE, detail="non-integer coefficients")

        def shifted(poly: Polynomial, shift: int) -> Polynomial:
            return poly(Polynomial([shift, 1]))

        def combined(top: Polynomial, bottom: Polynomial, sign: int) -> Polynomial:
            d1, d2, d3 = (shifted(bottom, s) for s in (1, 2, 3))
            return shifted(top, 1) * d2 * d3 + sign * (shifted(top, 2) * d1 * d3 + shifted(top, 3) * d1 * d2)

        # g(n+1) - g(n+2) - g(n+3) over the positive common denominator D(n+1) D(n+2) D(n+3)
        bound = combined(numerator, denominator, -1).trim()
        # the same arithmetic on |coefficients| dominates every intermediate float
        majorant = combined(Polynomial(np.abs(numerator.coef)), Polynomial(np.abs(denominator.coef)), 1)
        for start in range(POLYNOMIAL_SEARCH_LIMIT + 1):
            if np.max(shifted(majorant, start).coef) >= EXACT_FLOAT_LIMIT:
                return ConditionOutcome(
                    name=name,
                    status=ConditionStatus.FAILS,
                    detail=f"coefficients leave the exact float range at n = {start}",
                )
            # every Taylor coefficient at `start` negative => negative for all n >= start
            coefficients = [int(c) for c in shifted(bound, start).coef]
            if coefficients[0] < 0 and all(c <= 0 for c in coefficients):
                return ConditionOutcome(
                    name=name,
                    status=ConditionStatus.HOLDS,
                    from_index=start,
                    sign=Sign.NEGATIVE,
                    detail=f"g(n+1) - g(n+2) - g(n+3) < 0 for n >= {start}",
                )
        return ConditionOutcome(name=name, status=ConditionStatus.FAILS, detail="no negative tail found")

    def _ratio_conditions(self, partition: Partition, probe_depth: int) -> List[ConditionOutcome]:
        """Sufficient conditions on rho_n, checked with certified tail sup/inf."""
        sqrt = mpmath.sqrt
        half = mpmath.mpf(1) / 2
        found = {"growth": None, "small ratio positive": None, "small ratio nonpositive": None, "sqrt2 - 1": None}
        certified_anywhere = False

        for start in range(probe_depth + 1):
            sup, inf, certified, _ = self.partitions.tail_bounds(partition, start, start + TAIL_HORIZON)
            if not certified:
                continue
            certified_anywhere = True
            sup, inf = to_mpf(sup), to_mpf(inf)
            checks = {
                # rho_{n+1} > 1/2 and s_{n+1} <= 1 - 7 rho_{n+1}^2 / (8 rho_{n+1}^3 + 4), uniformly in n >= start
                "growth": inf > half and sup <= 1 - 7 * sup**2 / (8 * sup**3 + 4),
                "small ratio positive": sup <= half and sup < sqrt(2 + inf**3 / (1 - inf)) - 1,
                "small ratio nonpositive": sup <= half and inf >= sqrt(2 + sup**3 / (1 - sup)) - 1,
                "sqrt2 - 1": sup <= sqrt(2) - 1,
            }
            for key, holds in checks.items():
                if holds and found[key] is None:
                    found[key] = start

        signs = {
            "growth": Sign.NEGATIVE,
            "small ratio positive": Sign.POSITIVE,
            "small ratio nonpositive": Sign.NEGATIVE,
            "sqrt2 - 1": Sign.POSITIVE,
        }
        outcomes = []
        for key, start in found.items():
            if start is not None:
                outcomes.append(
                    ConditionOutcome(
                        name=key,
                        status=ConditionStatus.HOLDS,
                        from_index=start,
                        sign=signs[key],
                        detail=f"G(n) {'> 0' if signs[key] == Sign.POSITIVE else '<= 0'} for n >= {start}",
                    )
                )
            else:
                status = ConditionStatus.FAILS if certified_anywhere else ConditionStatus.UNCERTIFIED
                outcomes.append(ConditionOutcome(name=key, status=status))
        outcomes.append(self._limit_condition(partition))
        return outcomes

    def _limit_condition(self, partition: Partition) -> ConditionOutcome:
        name = "ratio limit in [1/2, 1)"
        profile = partition.rho_profile()
        match profile.behaviour:
            case RhoBehaviour.CONSTANT:
                (half, value) = coerce(Fraction(1, 2), profile.values[0])
                holds = half < value < 1
                detail = f"rho_n = {value} from n={profile.start}"
            case RhoBehaviour.INCREASING | RhoBehaviour.DECREASING if profile.limit is not None:
                (half, limit) = coerce(Fraction(1, 2), profile.limit)
                # a decreasing sequence sits above its limit, an increasing one below it
                holds = half <= limit < 1 if profile.behaviour == RhoBehaviour.DECREASING else half < limit < 1
                detail = f"rho_n {profile.behaviour.value} to {limit}"
            case RhoBehaviour.PERIODIC:
                return ConditionOutcome(name=name, status=ConditionStatus.FAILS, detail="rho_n oscillates")
            case _:
                return ConditionOutcome(name=name, status=ConditionStatus.UNCERTIFIED, detail="rho_n is not known")
        status = ConditionStatus.HOLDS if holds else ConditionStatus.FAILS
        return ConditionOutcome(name=name, status=status, detail=detail)

    def _golden_ratio_from(self, lengths: List[Enclosure], start: Optional[int]) -> Optional[int]:
        """First N >= start with 1 < I(n-1) / I(n) < golden ratio for every probed n > N."""
        if start is None:
            return None
        first = None
        for n in range(len(lengths) - 1, max(start, 0), -1):
            ratio = float(lengths[n - 1].value / lengths[n].value)
            if not 1 < ratio < GOLDEN_RATIO:
                break
            first = n - 1
        return first

    def _ratio_diagnostic(self, partition: Partition, k: int) -> float:
        current, following = to_mpf(partition.rho(k)), to_mpf(partition.rho(k + 1))
        return float(current**2 * (1 - following**3) / (following * (1 - current**3)))

    # Dimensions
    def dimensions(self, partition: Partition, k_max: int, tol: float) -> DimensionReport:
        """Hausdorff and packing approximants of 𝓜 for k = 1..k_max."""
        if k_max < 2:
            raise DomainError(f"k_max must be at least 2, got {k_max}")
        classification = self.classify(partition, min(k_max, 8), tol)
        if classification.verdict not in (Verdict.CANTOR, Verdict.HOMOGENEOUS_CANTOR):
            logger.info(f"Refusing dimensions for verdict {classification.verdict.value}")
            raise VerdictError(f"dimensions need a Cantor verdict, got {classification.verdict.value}")

        lengths = [self.distribution.length_enclosure(partition, k, tol) for k in range(k_max + 1)]
        log2 = mpmath.log(2)
        first = mpmath.log(to_mpf(lengths[0].value))
        hausdorff, packing, raw = [], [], []
        for k in range(1, k_max + 1):
            current = mpmath.log(to_mpf(lengths[k].value))
            decay = first - current
            hausdorff.append(float(k * log2 / decay))
            packing.append(float((k + 1) * log2 / (decay + log2)))
            raw.append(float(k * log2 / -current))

        rows = []
        for k in range(1, k_max + 1):
            rows.append(
                DimensionRow(
                    k=k,
                    interval_length=lengths[k].to_model(),
                    hausdorff=hausdorff[k - 1],
                    packing=packing[k - 1],
                    raw=raw[k - 1],
                    hausdorff_inf=min(hausdorff[k - 1 :]),
                    packing_sup=max(packing[k - 1 :]),
                )
            )
        return DimensionReport(verdict=classification.verdict, rows=rows)

    # Fibres
    def attain(self, partition: Partition, target: object, depth: int, tol: float) -> AttainResult:
        """Descend the interval tree towards a value in 𝓜; records levels where both children qualify."""
        if depth < 0:
            raise DomainError(f"depth must be nonnegative, got {depth}")
        try:
            target = exact(target)
        except (ValueError, ZeroDivisionError) as e:
            logger.info(f"Rejected attain target {target!r}: {e}")
            raise DomainError(f"cannot read target {target!r}") from e
        node = self._node(partition, "", tol)
        if not self._contains(node, target):
            raise DomainError(f"{target} lies outside [M_1̄, M_0̄]")

        branching = []
        for level in range(1, depth + 1):
            left = self._node(partition, node.word + "1", tol)
            right = self._node(partition, node.word + "0", tol)
            in_left, in_right = self._contains(left, target), self._contains(right, target)
            if in_left and in_right:
                branching.append(level)
            if in_left:
                node = left
            elif in_right:
                node = right
            else:
                raise DomainError(f"{target} falls into a gap of 𝓜 at level {level}")
        return AttainResult(
            target=float(exact(target)),
            word=node.word,
            interval=LabeledInterval(word=node.word, lo=node.lo.to_model(), hi=node.hi.to_model()),
            branching_levels=branching,
        )

    def _contains(self, node: _Node, target: object) -> bool:
        value = exact(target)
        (lower, upper, value) = coerce(node.lo.lower, node.hi.upper, value)
        return lower <= value <= upper
