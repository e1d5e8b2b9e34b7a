"""Working precision, number coercion and ball arithmetic shared by the services.

Exact rationals (Fraction) are kept for rational partitions; everything else runs on mpmath
reals at APP_WORKING_DPS digits. An Enclosure is a midpoint-radius ball whose radius bounds the
truncation error; non-exact values additionally get a rounding allowance when they are signed or
exported.
"""

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import mpmath
from mpmath import mpf

from app.models import BoundedValue, Sign

WORKING_DPS = int(os.environ.get("APP_WORKING_DPS", "40"))
MAX_SERIES_TERMS = int(os.environ.get("APP_MAX_SERIES_TERMS", "1000000"))
DEFAULT_TOL = float(os.environ.get("APP_DEFAULT_TOL", "1e-12"))
DEFAULT_SEED = int(os.environ.get("APP_DEFAULT_SEED", "0"))

mpmath.mp.dps = WORKING_DPS

PRECISION_GUARD = 10


def working_precision(digits: int):
    """mpmath context carrying `digits` significant digits plus guard digits, never below APP_WORKING_DPS."""
    return mpmath.workdps(max(WORKING_DPS, digits + PRECISION_GUARD))


Scalar = Union[Fraction, mpf]

ZERO = Fraction(0)


def exact(value: object) -> Fraction:
    """Exact rational value of an int, float, Fraction, mpf or 'p/q' / decimal string."""
    match value:
        case Fraction():
            return value
        case int() | float():
            return Fraction(value)
        case str():
            return Fraction(value.strip())
        case mpf():
            sign, man, exp, _ = value._mpf_
            if not man and exp:
                raise ValueError(f"{value} has no rational value")
            numerator = -man if sign else man
            return Fraction(numerator) * Fraction(2) ** exp
    raise TypeError(f"cannot convert {value!r} to a rational")


def parse_rational(value: object) -> Fraction:
    """Configuration numbers: decimals are read as the decimal they spell, 0.4 -> 2/5."""
    match value:
        case float():
            return Fraction(repr(value))
        case _:
            return exact(value)


def to_mpf(value: object) -> mpf:
    if isinstance(value, Fraction):
        return mpf(value.numerator) / value.denominator
    return mpmath.mpf(value)


def coerce(*values: object) -> tuple:
    """Common representation: all Fractions stay exact, anything else turns the lot into mpf."""
    if all(isinstance(v, (Fraction, int)) for v in values):
        return tuple(Fraction(v) for v in values)
    return tuple(to_mpf(v) for v in values)


def rounding_radius(value: Scalar) -> Scalar:
    if isinstance(value, Fraction):
        return ZERO
    ulp = mpf(10) ** (-(mpmath.mp.dps - 5))
    return (abs(value) + 1) * ulp


def round_up(value: Scalar) -> float:
    as_float = float(value)
    if as_float == 0.0:
        return 0.0
    return math.nextafter(as_float, math.inf)


@dataclass(frozen=True)
class Enclosure:
    """value ± radius, with radius the certified truncation error."""

    value: Scalar
    radius: Scalar = ZERO

    def __post_init__(self):
        value, radius = coerce(self.value, self.radius)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "radius", radius)

    def __add__(self, other: "Enclosure | Scalar | int") -> "Enclosure":
        other = other if isinstance(other, Enclosure) else Enclosure(other)
        left, right = coerce(self.value, other.value)
        return Enclosure(left + right, self.radius + other.radius)

    def __radd__(self, other: "Scalar | int") -> "Enclosure":
        return self + other

    def __sub__(self, other: "Enclosure | Scalar | int") -> "Enclosure":
        other = other if isinstance(other, Enclosure) else Enclosure(other)
        return self + (-other)

    def __rsub__(self, other: "Scalar | int") -> "Enclosure":
        return Enclosure(other) - self

    def __neg__(self) -> "Enclosure":
        return Enclosure(-self.value, self.radius)

    def __mul__(self, factor: "Scalar | int") -> "Enclosure":
        value, radius, scale = coerce(self.value, self.radius, factor)
        return Enclosure(value * scale, radius * abs(scale))

    @property
    def is_exact(self) -> bool:
        return isinstance(self.value, Fraction) and self.radius == 0

    @property
    def slack(self) -> Scalar:
        """Radius plus the rounding allowance of the representation."""
        return self.radius + rounding_radius(self.value)

    @property
    def lower(self) -> Scalar:
        return self.value - self.slack

    @property
    def upper(self) -> Scalar:
        return self.value + self.slack

    def sign(self) -> Sign:
        if self.is_exact:
            if self.value > 0:
                return Sign.POSITIVE
            if self.value < 0:
                return Sign.NEGATIVE
            return Sign.ZERO
        if self.lower > 0:
            return Sign.POSITIVE
        if self.upper < 0:
            return Sign.NEGATIVE
        return Sign.UNDECIDED

    def to_model(self) -> BoundedValue:
        return BoundedValue(
            value=float(self.value),
            radius=round_up(self.slack),
            exact=str(self.value) if self.is_exact else None,
        )
