from sqlmodel import SQLModel, Field
from typing import Optional, List, Tuple
from enum import Enum
from pydantic import field_validator, model_validator


class GeneratorKind(str, Enum):
    LUROTH = "luroth"
    DYADIC = "dyadic"
    GEOMETRIC = "geometric"
    TWO_PERIODIC = "two_periodic"
    CLOSED_FORM = "closed_form"
    TABLE = "table"


class SignTail(str, Enum):
    ALL_ZERO = "all-zero"
    ALL_ONE = "all-one"
    PERIODIC = "periodic"


class Sign(str, Enum):
    POSITIVE = "+"
    NEGATIVE = "-"
    ZERO = "0"
    UNDECIDED = "?"


class Verdict(str, Enum):
    FINITE_UNION = "finite_union"
    CANTOR = "cantor"
    HOMOGENEOUS_CANTOR = "homogeneous_cantor"
    UNDETERMINED = "undetermined"


class ConditionStatus(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    NOT_APPLICABLE = "not_applicable"
    UNCERTIFIED = "uncertified"


class RhoBehaviour(str, Enum):
    CONSTANT = "constant"
    PERIODIC = "periodic"
    INCREASING = "increasing"
    DECREASING = "decreasing"
    OPAQUE = "opaque"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


# Configuration schemas
class PartitionConfig(SQLModel, table=False):
    kind: GeneratorKind
    ratio: Optional[str] = Field(default=None, max_length=200)
    even: Optional[str] = Field(default=None, max_length=200)
    values: Optional[List[str]] = Field(default=None)
    precision: int = Field(default=15, ge=15, le=200)


class SignSpec(SQLModel, table=False):
    """Infinite sign sequence: a finite prefix followed by a constant or periodic tail."""

    prefix: str = Field(default="", max_length=4096)
    tail: SignTail = Field(default=SignTail.ALL_ZERO)
    period: str = Field(default="", max_length=4096)

    @field_validator("prefix", "period")
    @classmethod
    def bits_only(cls, value: str) -> str:
        if set(value) - {"0", "1"}:
            raise ValueError(f"sign words use the bits 0 and 1 only, got {value!r}")
        return value

    @model_validator(mode="after")
    def period_matches_tail(self) -> "SignSpec":
        if self.tail == SignTail.PERIODIC and not self.period:
            raise ValueError("a periodic tail needs a nonempty period word")
        if self.tail != SignTail.PERIODIC and self.period:
            raise ValueError("a period word is only allowed with a periodic tail")
        return self

    @classmethod
    def all_zero(cls, prefix: str = "") -> "SignSpec":
        return cls(prefix=prefix, tail=SignTail.ALL_ZERO)

    @classmethod
    def all_one(cls, prefix: str = "") -> "SignSpec":
        return cls(prefix=prefix, tail=SignTail.ALL_ONE)

    @classmethod
    def periodic(cls, period: str, prefix: str = "") -> "SignSpec":
        return cls(prefix=prefix, tail=SignTail.PERIODIC, period=period)

    def bit(self, n: int) -> int:
        """Sign ε_n for n >= 1."""
        if n <= len(self.prefix):
            return int(self.prefix[n - 1])
        match self.tail:
            case SignTail.ALL_ZERO:
                return 0
            case SignTail.ALL_ONE:
                return 1
            case SignTail.PERIODIC:
                return int(self.period[(n - len(self.prefix) - 1) % len(self.period)])

    def prepend(self, word: str) -> "SignSpec":
        """The concatenation word·ε."""
        return SignSpec(prefix=word + self.prefix, tail=self.tail, period=self.period)

    def tail_pattern(self) -> Tuple[List[int], int]:
        """Bits of one tail period and the index of the first tail position."""
        match self.tail:
            case SignTail.ALL_ZERO:
                bits = [0]
            case SignTail.ALL_ONE:
                bits = [1]
            case SignTail.PERIODIC:
                bits = [int(c) for c in self.period]
        return bits, len(self.prefix) + 1

    def label(self) -> str:
        match self.tail:
            case SignTail.PERIODIC:
                tail = f"period:{self.period}"
            case _:
                tail = f"tail:{self.tail.value}"
        return f"prefix:{self.prefix},{tail}" if self.prefix else tail


class RunConfig(SQLModel, table=False):
    command: str = Field(max_length=50)
    partition: str = Field(default="luroth", max_length=4096)
    tol: float = Field(default=1e-12, gt=0.0)
    seed: int = Field(default=0)
    output_format: OutputFormat = Field(default=OutputFormat.JSON)
    output: Optional[str] = Field(default=None, max_length=4096)
    strict: bool = Field(default=False)


# Result schemas
class BoundedValue(SQLModel, table=False):
    value: float
    radius: float = Field(default=0.0, ge=0.0)
    exact: Optional[str] = Field(default=None)


class TailStats(SQLModel, table=False):
    k: int = Field(ge=0)
    s_k: float
    m_k: float
    certified: bool
    behaviour: RhoBehaviour = Field(default=RhoBehaviour.OPAQUE)
    note: Optional[str] = Field(default=None)


class ExpansionStep(SQLModel, table=False):
    n: int = Field(ge=1)
    d: Optional[int] = Field(default=None, ge=1)  # None encodes the digit ∞
    s: int = Field(ge=0, le=1)
    orbit: float
    q: Optional[float] = Field(default=None)  # None once the orbit is at 0 (q is infinite)
    approx: float
    theta: float


class ExpansionTrace(SQLModel, table=False):
    x0: float
    steps: List[ExpansionStep] = Field(default=[])
    terminated: bool = Field(default=False)


class CdfPoint(SQLModel, table=False):
    z: float
    analytic: BoundedValue
    empirical: Optional[float] = Field(default=None)


class GapValue(SQLModel, table=False):
    n: int = Field(ge=0)
    g: Optional[float] = Field(default=None)  # g(n), undefined at n = 0
    gap: BoundedValue
    sign: Sign


class LabeledInterval(SQLModel, table=False):
    word: str
    lo: BoundedValue
    hi: BoundedValue


class MergedInterval(SQLModel, table=False):
    lo: float
    hi: float
    radius: float = Field(default=0.0, ge=0.0)
    members: int = Field(default=1, ge=1)


class AmbiguousPair(SQLModel, table=False):
    left: str
    right: str
    separation: float
    radius: float


class ConditionOutcome(SQLModel, table=False):
    name: str
    status: ConditionStatus
    from_index: Optional[int] = Field(default=None)
    sign: Optional[Sign] = Field(default=None)
    detail: str = Field(default="")


class Classification(SQLModel, table=False):
    verdict: Verdict
    count: Optional[int] = Field(default=None)
    from_index: Optional[int] = Field(default=None)
    probe_depth: int = Field(ge=1)
    gaps: List[GapValue] = Field(default=[])
    conditions: List[ConditionOutcome] = Field(default=[])
    golden_ratio_from: Optional[int] = Field(default=None)
    ratio_diagnostic: List[float] = Field(default=[])


class MSetApprox(SQLModel, table=False):
    depth: int = Field(ge=0, le=20)
    intervals: List[LabeledInterval] = Field(default=[])
    merged: List[MergedInterval] = Field(default=[])
    ambiguous: List[AmbiguousPair] = Field(default=[])
    classification: Classification


class DimensionRow(SQLModel, table=False):
    k: int = Field(ge=1)
    interval_length: BoundedValue
    hausdorff: float
    packing: float
    raw: float
    hausdorff_inf: float
    packing_sup: float


class DimensionReport(SQLModel, table=False):
    verdict: Verdict
    rows: List[DimensionRow] = Field(default=[])


class AttainResult(SQLModel, table=False):
    target: float
    word: str
    interval: LabeledInterval
    branching_levels: List[int] = Field(default=[])


class PartitionPoint(SQLModel, table=False):
    n: int = Field(ge=1)
    t: float
    a: float
    rho: float
    exact_t: Optional[str] = Field(default=None)


class PartitionReport(SQLModel, table=False):
    config: PartitionConfig
    points: List[PartitionPoint] = Field(default=[])
    tail: TailStats


class ThetaReport(SQLModel, table=False):
    eps: str
    n_iter: int = Field(ge=1)
    seed: int
    empirical_mean: float
    mean: BoundedValue
    thetas: List[float] = Field(default=[])
