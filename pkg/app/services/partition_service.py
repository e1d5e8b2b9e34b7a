import json
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

from mpmath import mpf
from numpy.polynomial import Polynomial

from app.errors import ConfigError, PartitionError
from app.models import GeneratorKind, PartitionConfig, RhoBehaviour, TailStats
from app.numerics import Scalar, coerce, parse_rational, to_mpf, working_precision
from app.services.series_service import PartialFractions, SelfSimilarity, TermKind

logger = logging.getLogger(__name__)

# indices checked for positivity and strict decrease when a partition is built
VALIDATION_HORIZON = 64


@dataclass(frozen=True)
class RhoProfile:
    """What is known about rho_n for n >= start; earlier ratios are evaluated one by one."""

    behaviour: RhoBehaviour
    start: int = 1
    values: Tuple[Scalar, ...] = ()
    limit: Optional[Scalar] = None


class SequenceGenerator(ABC):
    """Source of the partition points t_1 = 1 > t_2 > ... -> 0."""

    kind: GeneratorKind
    exact: bool = True

    @abstractmethod
    def t(self, n: int) -> Scalar: ...

    @abstractmethod
    def describe(self) -> PartitionConfig: ...

    def self_similarity(self) -> Optional[SelfSimilarity]:
        return None

    def partial_fractions(self, kind: TermKind) -> Optional[PartialFractions]:
        return None

    def g_rational(self) -> Optional[Tuple[Polynomial, Polynomial]]:
        return None

    def rho_profile(self) -> RhoProfile:
        return RhoProfile(RhoBehaviour.OPAQUE)

    def locate(self, y: Union[Scalar, float], t: Callable[[int], Union[Scalar, float]]) -> int:
        """Digit k with t(k+1) < y <= t(k), for 0 < y <= 1."""
        high = 1
        while t(high + 1) >= y:
            high *= 2
        low = high // 2 if high > 1 else 0
        while high - low > 1:
            middle = (low + high) // 2
            if t(middle + 1) < y:
                high = middle
            else:
                low = middle
        return high


class LurothGenerator(SequenceGenerator):
    kind = GeneratorKind.LUROTH

    _FRACTIONS = {
        TermKind.A: PartialFractions(((0, 1, Fraction(1)), (1, 1, Fraction(-1)))),
        TermKind.G: PartialFractions(
            ((0, 2, Fraction(1, 2)), (1, 2, Fraction(1, 2)), (0, 1, Fraction(-1)), (1, 1, Fraction(1)))
        ),
        TermKind.M0: PartialFractions(((0, 1, Fraction(3, 2)), (1, 1, Fraction(-3, 2)), (0, 2, Fraction(-1, 2)))),
        TermKind.T: PartialFractions(((0, 1, Fraction(1)),)),
    }

    def t(self, n: int) -> Scalar:
        return Fraction(1, n)

    def describe(self) -> PartitionConfig:
        return PartitionConfig(kind=self.kind)

    def partial_fractions(self, kind: TermKind) -> Optional[PartialFractions]:
        return self._FRACTIONS.get(kind)

    def g_rational(self) -> Optional[Tuple[Polynomial, Polynomial]]:
        # g(k) = 1 / (2 k^2 (k+1)^2)
        return Polynomial([1]), Polynomial([0, 0, 2, 4, 2])

    def rho_profile(self) -> RhoProfile:
        return RhoProfile(RhoBehaviour.INCREASING, limit=Fraction(1))

    def locate(self, y: Union[Scalar, float], t: Callable[[int], Union[Scalar, float]]) -> int:
        digit = int(1 / y)
        # float reciprocals can land one off near the endpoints 1/k
        while digit > 1 and y > t(digit):
            digit -= 1
        while y <= t(digit + 1):
            digit += 1
        return digit


class GeometricGenerator(SequenceGenerator):
    """t_n = ratio ** (n - 1)."""

    kind = GeneratorKind.GEOMETRIC

    def __init__(self, ratio: Scalar):
        if not 0 < ratio < 1:
            raise PartitionError(f"geometric ratio must lie in (0, 1), got {ratio}")
        self.ratio = ratio
        self.exact = isinstance(ratio, Fraction)

    def t(self, n: int) -> Scalar:
        return self.ratio ** (n - 1)

    def describe(self) -> PartitionConfig:
        return PartitionConfig(kind=self.kind, ratio=str(self.ratio))

    def self_similarity(self) -> Optional[SelfSimilarity]:
        return SelfSimilarity(start=1, period=1, ratio=self.ratio)

    def rho_profile(self) -> RhoProfile:
        return RhoProfile(RhoBehaviour.CONSTANT, values=(self.ratio,))


class DyadicGenerator(GeometricGenerator):
    kind = GeneratorKind.DYADIC

    def __init__(self):
        super().__init__(Fraction(1, 2))

    def describe(self) -> PartitionConfig:
        return PartitionConfig(kind=self.kind)


class TwoPeriodicGenerator(SequenceGenerator):
    """t_{2m+1} = ratio ** m and t_{2m+2} = even * ratio ** m."""

    kind = GeneratorKind.TWO_PERIODIC

    def __init__(self, even: Scalar, ratio: Scalar):
        if not 0 < ratio < even < 1:
            raise PartitionError(f"two-periodic data needs 0 < ratio < even < 1, got even={even}, ratio={ratio}")
        self.even = even
        self.ratio = ratio
        self.exact = isinstance(even, Fraction) and isinstance(ratio, Fraction)

    def t(self, n: int) -> Scalar:
        m, parity = divmod(n - 1, 2)
        scale = self.ratio**m
        return scale * self.even if parity else scale

    def describe(self) -> PartitionConfig:
        return PartitionConfig(kind=self.kind, even=str(self.even), ratio=str(self.ratio))

    def self_similarity(self) -> Optional[SelfSimilarity]:
        return SelfSimilarity(start=1, period=2, ratio=self.ratio)

    def rho_profile(self) -> RhoProfile:
        return RhoProfile(RhoBehaviour.PERIODIC, values=(self.even, self.ratio / self.even))


class TableGenerator(SequenceGenerator):
    """Explicit t_1..t_K followed by t_{K+j} = t_K * tail_ratio ** j."""

    kind = GeneratorKind.TABLE

    def __init__(self, values: List[Scalar], tail_ratio: Scalar):
        if not values:
            raise PartitionError("a table partition needs at least t_1")
        if not 0 < tail_ratio < 1:
            raise PartitionError(f"tail ratio must lie in (0, 1), got {tail_ratio}")
        self.values = tuple(values)
        self.tail_ratio = tail_ratio
        self.exact = all(isinstance(v, Fraction) for v in values) and isinstance(tail_ratio, Fraction)

    def t(self, n: int) -> Scalar:
        size = len(self.values)
        if n <= size:
            return self.values[n - 1]
        return self.values[-1] * self.tail_ratio ** (n - size)

    def describe(self) -> PartitionConfig:
        return PartitionConfig(kind=self.kind, values=[str(v) for v in self.values], ratio=str(self.tail_ratio))

    def self_similarity(self) -> Optional[SelfSimilarity]:
        return SelfSimilarity(start=len(self.values), period=1, ratio=self.tail_ratio)

    def rho_profile(self) -> RhoProfile:
        return RhoProfile(RhoBehaviour.CONSTANT, start=len(self.values), values=(self.tail_ratio,))


class ClosedFormGenerator(SequenceGenerator):
    """Arbitrary index -> real function; nothing about its tail is known beyond monotonicity."""

    kind = GeneratorKind.CLOSED_FORM
    exact = False

    def __init__(self, function: Callable[[int], object], name: str = "custom"):
        self.function = function
        self.name = name

    def t(self, n: int) -> Scalar:
        return to_mpf(self.function(n))

    def describe(self) -> PartitionConfig:
        return PartitionConfig(kind=self.kind, ratio=self.name)


class Partition:
    """An α-Lüroth partition A_n = (t_{n+1}, t_n] with cached evaluations."""

    def __init__(self, generator: SequenceGenerator, precision: int = 15):
        self.generator = generator
        self.precision = precision
        self._t: Dict[int, Scalar] = {}
        self._t_float: Dict[int, float] = {}
        self._a_float: Dict[int, float] = {}

    @property
    def kind(self) -> GeneratorKind:
        return self.generator.kind

    @property
    def exact(self) -> bool:
        return self.generator.exact

    def t(self, n: int) -> Scalar:
        if n < 1:
            raise IndexError(f"partition indices start at 1, got {n}")
        value = self._t.get(n)
        if value is None:
            value = self.generator.t(n)
            self._t[n] = value
        return value

    def a(self, n: int) -> Scalar:
        return self.t(n) - self.t(n + 1)

    def rho(self, n: int) -> Scalar:
        return self.t(n + 1) / self.t(n)

    def t_float(self, n: int) -> float:
        value = self._t_float.get(n)
        if value is None:
            value = float(self.t(n))
            self._t_float[n] = value
        return value

    def a_float(self, n: int) -> float:
        value = self._a_float.get(n)
        if value is None:
            value = float(self.a(n))
            self._a_float[n] = value
        return value

    def locate(self, y: Scalar) -> int:
        return self.generator.locate(y, self.t)

    def locate_float(self, y: float) -> int:
        return self.generator.locate(y, self.t_float)

    def self_similarity(self) -> Optional[SelfSimilarity]:
        return self.generator.self_similarity()

    def partial_fractions(self, kind: Optional[TermKind]) -> Optional[PartialFractions]:
        return self.generator.partial_fractions(kind) if kind is not None else None

    def rho_profile(self) -> RhoProfile:
        return self.generator.rho_profile()

    def working_precision(self):
        """mpmath context for evaluating this partition at its configured precision."""
        return working_precision(self.precision)

    def describe(self) -> PartitionConfig:
        config = self.generator.describe()
        config.precision = self.precision
        return config


class PartitionService:
    """Service for building partitions and reading their tail behaviour."""

    def make_partition(self, source: Union[PartitionConfig, SequenceGenerator]) -> Partition:
        """Build and validate a partition from a config or a ready generator."""
        if isinstance(source, SequenceGenerator):
            partition = Partition(source)
        else:
            partition = Partition(self._generator_from_config(source), precision=source.precision)
        with partition.working_precision():
            self._validate(partition)
        return partition

    def _generator_from_config(self, config: PartitionConfig) -> SequenceGenerator:
        try:
            match config.kind:
                case GeneratorKind.LUROTH:
                    return LurothGenerator()
                case GeneratorKind.DYADIC:
                    return DyadicGenerator()
                case GeneratorKind.GEOMETRIC:
                    return GeometricGenerator(parse_rational(self._required(config.ratio, "ratio")))
                case GeneratorKind.TWO_PERIODIC:
                    return TwoPeriodicGenerator(
                        parse_rational(self._required(config.even, "even")),
                        parse_rational(self._required(config.ratio, "ratio")),
                    )
                case GeneratorKind.TABLE:
                    values = [parse_rational(v) for v in self._required(config.values, "values")]
                    return TableGenerator(values, parse_rational(self._required(config.ratio, "tail_ratio")))
                case GeneratorKind.CLOSED_FORM:
                    raise PartitionError("closed-form generators are built from a Python function, not a config")
        except (ValueError, ZeroDivisionError) as e:
            if isinstance(e, PartitionError):
                raise
            logger.info(f"Rejected partition parameters {config}: {e}")
            raise PartitionError(f"invalid number in partition config: {e}") from e

    def _required(self, value, name: str):
        if value is None:
            raise PartitionError(f"partition config is missing '{name}'")
        return value

    def _validate(self, partition: Partition) -> None:
        first = partition.t(1)
        if partition.exact and first != 1:
            raise PartitionError(f"t_1 must equal 1, got {first}")
        if not partition.exact and abs(to_mpf(first) - 1) > mpf(10) ** (-partition.precision):
            raise PartitionError(f"t_1 must equal 1, got {first}")

        horizon = VALIDATION_HORIZON
        if partition.kind == GeneratorKind.TABLE:
            horizon = max(horizon, len(partition.generator.values) + 2)  # type: ignore[attr-defined]
        previous = first
        for n in range(2, horizon + 1):
            current = partition.t(n)
            if not 0 < current < previous:
                raise PartitionError(f"t_n must be positive and strictly decreasing, fails at n={n}: {current}")
            previous = current

    # Configuration input
    def from_json(self, data: Union[str, dict]) -> PartitionConfig:
        """Parse {"generator": ...} partition JSON (a document or an already decoded dict)."""
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as e:
                logger.info(f"Partition config is not valid JSON: {e}")
                raise ConfigError(f"partition config is not valid JSON: {e}") from e

        spec = data.get("generator", data) if isinstance(data, dict) else data
        precision = data.get("precision", 15) if isinstance(data, dict) else 15
        match spec:
            case "luroth" | "dyadic":
                return PartitionConfig(kind=GeneratorKind(spec), precision=precision)
            case {"geometric": ratio}:
                return PartitionConfig(kind=GeneratorKind.GEOMETRIC, ratio=str(ratio), precision=precision)
            case {"two_periodic": {"even": even, "ratio": ratio}}:
                return PartitionConfig(
                    kind=GeneratorKind.TWO_PERIODIC, even=str(even), ratio=str(ratio), precision=precision
                )
            case {"table": list() as values, "tail_ratio": ratio}:
                return PartitionConfig(
                    kind=GeneratorKind.TABLE, values=[str(v) for v in values], ratio=str(ratio), precision=precision
                )
        raise ConfigError(f"unknown generator specification: {spec!r}")

    def load_config(self, path: Path) -> PartitionConfig:
        """Read a partition config file."""
        try:
            text = path.read_text()
        except OSError as e:
            logger.info(f"Could not read partition config {path}: {e}")
            raise ConfigError(f"could not read partition config {path}: {e}") from e
        return self.from_json(text)

    def parse_argument(self, argument: str) -> PartitionConfig:
        """CLI shorthand: a name, geometric:R, two-periodic:E:R, table:T1,T2,..:R, inline JSON or a file path."""
        text = argument.strip()
        if text.startswith("{"):
            return self.from_json(text)
        name, _, rest = text.partition(":")
        match name:
            case "luroth" | "dyadic" if not rest:
                return PartitionConfig(kind=GeneratorKind(name))
            case "geometric" if rest:
                return PartitionConfig(kind=GeneratorKind.GEOMETRIC, ratio=rest)
            case "two-periodic" | "two_periodic" if rest.count(":") == 1:
                even, ratio = rest.split(":")
                return PartitionConfig(kind=GeneratorKind.TWO_PERIODIC, even=even, ratio=ratio)
            case "table" if rest.count(":") == 1:
                values, ratio = rest.split(":")
                return PartitionConfig(kind=GeneratorKind.TABLE, values=values.split(","), ratio=ratio)
        path = Path(text)
        if path.suffix == ".json" or path.exists():
            return self.load_config(path)
        raise ConfigError(f"unknown partition '{argument}'")

    # Tail behaviour of rho_n
    def tail_bounds(self, partition: Partition, k: int, horizon: int) -> Tuple[Scalar, Scalar, bool, str]:
        """(sup, inf, certified, note) of rho_n over n > k."""
        if horizon <= k:
            raise ValueError(f"horizon {horizon} must exceed k={k}")
        profile = partition.rho_profile()
        explicit = [partition.rho(n) for n in range(k + 1, max(k + 1, profile.start))]

        match profile.behaviour:
            case RhoBehaviour.CONSTANT | RhoBehaviour.PERIODIC:
                candidates = list(coerce(*explicit, *profile.values))
                return max(candidates), min(candidates), True, f"{profile.behaviour.value} ratios from n={profile.start}"
            case RhoBehaviour.INCREASING if profile.limit is not None:
                first = partition.rho(max(k + 1, profile.start))
                if profile.limit < 1:
                    *candidates, limit = coerce(*explicit, first, profile.limit)
                    return max(*candidates, limit), min(candidates), True, "rho_n increases to its limit"
                *candidates, sampled = coerce(*explicit, first, partition.rho(horizon))
                return max(*candidates, sampled), min(candidates), False, f"rho_n increases to {profile.limit}"
            case RhoBehaviour.DECREASING if profile.limit is not None:
                first = partition.rho(max(k + 1, profile.start))
                if profile.limit > 0:
                    *candidates, limit = coerce(*explicit, first, profile.limit)
                    return max(candidates), min(*candidates, limit), True, "rho_n decreases to its limit"
                *candidates, sampled = coerce(*explicit, first, partition.rho(horizon))
                return max(candidates), min(*candidates, sampled), False, "rho_n decreases to 0"

        sampled = list(coerce(*[partition.rho(n) for n in range(k + 1, horizon + 1)]))
        return max(sampled), min(sampled), False, f"sampled over ({k}, {horizon}]"

    def tail_stats(self, partition: Partition, k: int, horizon: int = 1000) -> TailStats:
        """Sup and inf of rho_n over n > k, certified when the generator's ratio tail is known."""
        sup, inf, certified, note = self.tail_bounds(partition, k, horizon)
        return TailStats(
            k=k,
            s_k=float(sup),
            m_k=float(inf),
            certified=certified,
            behaviour=partition.rho_profile().behaviour,
            note=note,
        )


def luroth() -> Partition:
    return PartitionService().make_partition(LurothGenerator())


def dyadic() -> Partition:
    return PartitionService().make_partition(DyadicGenerator())


def geometric(ratio: Union[str, Fraction, mpf]) -> Partition:
    value = ratio if isinstance(ratio, (Fraction, mpf)) else parse_rational(ratio)
    return PartitionService().make_partition(GeometricGenerator(value))
