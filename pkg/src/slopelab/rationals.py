"""Exact rational and dyadic arithmetic helpers.

Everything downstream works over plain ``fractions.Fraction``; this module
owns parsing, dyadic classification, rational vectors, and the power-of-two
comparisons that keep astronomically large exponents out of materialized
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

# Largest |exponent| for which 2**e is materialized as a Fraction.  Beyond
# this, callers must go through compare_pow2 / pow2_upper.
POW2_MATERIALIZE_CAP = 1 << 14

Vector = tuple[Fraction, ...]


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse a "p/q" or "p" literal into an exact Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    return Fraction(text.strip())


def format_rational(value: Fraction) -> str:
    """Canonical "p/q" form, denominator always present."""
    return f"{value.numerator}/{value.denominator}"


def decimal_string(value: Fraction, digits: int) -> str:
    """Correctly rounded decimal rendering (ties away from zero), no floats."""
    if digits < 0:
        raise ValueError("digits must be >= 0")
    sign = "-" if value < 0 else ""
    scaled = abs(value) * 10**digits
    units, rem = divmod(scaled.numerator, scaled.denominator)
    if 2 * rem >= scaled.denominator:
        units += 1
    text = str(units).rjust(digits + 1, "0")
    if digits == 0:
        return sign + text
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def is_dyadic(value: Fraction) -> bool:
    """True iff value = k / 2**s for integers k, s >= 0."""
    den = value.denominator
    return den & (den - 1) == 0


@dataclass(frozen=True)
class DyadicRational:
    """Value mantissa * 2**exponent with mantissa odd or zero."""

    mantissa: int
    exponent: int

    def __post_init__(self) -> None:
        if self.mantissa != 0 and self.mantissa % 2 == 0:
            raise ValueError("mantissa must be odd or zero")

    @staticmethod
    def from_fraction(value: Fraction) -> "DyadicRational":
        if not is_dyadic(value):
            raise ValueError(f"{value} is not a dyadic rational")
        num, den = value.numerator, value.denominator
        exponent = -(den.bit_length() - 1)
        if num == 0:
            return DyadicRational(0, 0)
        while num % 2 == 0:
            num //= 2
            exponent += 1
        return DyadicRational(num, exponent)

    def as_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa * (1 << self.exponent))
        return Fraction(self.mantissa, 1 << -self.exponent)


def pow2(exponent: int) -> Fraction:
    """Exact 2**exponent as a Fraction; refuses absurd materializations."""
    if abs(exponent) > POW2_MATERIALIZE_CAP:
        raise OverflowError(f"2**{exponent} exceeds the materialization cap")
    if exponent >= 0:
        return Fraction(1 << exponent)
    return Fraction(1, 1 << -exponent)


def pow2_upper(exponent: int) -> Fraction:
    """A representable upper bound for 2**exponent (exact when within cap).

    Only meaningful for negative exponents: exponents below the cap are
    clamped upward to 2**-POW2_MATERIALIZE_CAP, which keeps <=-assertions
    valid while staying representable.
    """
    if exponent >= 0:
        return pow2(exponent)
    return pow2(max(exponent, -POW2_MATERIALIZE_CAP))


def floor_log2(value: Fraction) -> int:
    """Largest e with 2**e <= value (value > 0), computed via bit lengths."""
    if value <= 0:
        raise ValueError("floor_log2 requires a positive value")
    num, den = value.numerator, value.denominator
    # num/den lies in (2**(e-1), 2**(e+1)), so the answer is e or e-1.
    e = num.bit_length() - den.bit_length()
    at_least = num >= den << e if e >= 0 else num << -e >= den
    return e if at_least else e - 1


def ceil_log2(value: Fraction) -> int:
    """Smallest e with 2**e >= value (value > 0)."""
    f = floor_log2(value)
    return f if compare_pow2(value, f) == 0 else f + 1


def compare_pow2(value: Fraction, exponent: int) -> int:
    """sign(value - 2**exponent) without materializing huge powers."""
    if value <= 0:
        return -1
    lg = floor_log2(value)
    if lg < exponent:
        return -1
    if lg > exponent:
        return 1
    # 2**lg <= value < 2**(lg+1) and lg == exponent: equality is decidable
    # with input-sized integers only.
    num, den = value.numerator, value.denominator
    if exponent >= 0:
        return 0 if num == den << exponent else 1
    return 0 if num << -exponent == den else 1


def ceil_sqrt(value: Fraction) -> int:
    """Smallest integer k with k*k >= value (value >= 0)."""
    if value < 0:
        raise ValueError("ceil_sqrt requires a nonnegative value")
    ceiling = -((-value.numerator) // value.denominator)
    k = isqrt(ceiling)
    return k if k * k >= value else k + 1


def sqrt_exact(value: Fraction) -> Fraction | None:
    """Exact square root when value is a square of a rational, else None."""
    if value < 0:
        return None
    num_root = isqrt(value.numerator)
    den_root = isqrt(value.denominator)
    if num_root * num_root == value.numerator and den_root * den_root == value.denominator:
        return Fraction(num_root, den_root)
    return None


def sqrt_lower(value: Fraction, bits: int = 80) -> Fraction:
    """Rational lower bound on sqrt(value) within 2**-bits."""
    if value < 0:
        raise ValueError("sqrt_lower requires a nonnegative value")
    scaled = value * (Fraction(1) * (1 << (2 * bits)))
    root = isqrt(scaled.numerator // scaled.denominator)
    return Fraction(root, 1 << bits)


# ---------------------------------------------------------------------------
# Rational vectors


def as_vector(values: Iterable[Fraction | int | str]) -> Vector:
    return tuple(parse_rational(v) for v in values)


def format_vector(vec: Sequence[Fraction]) -> list[str]:
    return [format_rational(v) for v in vec]


def vadd(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vector:
    return tuple(x + y for x, y in zip(a, b, strict=True))


def vsub(a: Sequence[Fraction], b: Sequence[Fraction]) -> Vector:
    return tuple(x - y for x, y in zip(a, b, strict=True))


def vscale(scalar: Fraction, vec: Sequence[Fraction]) -> Vector:
    return tuple(scalar * x for x in vec)


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b, strict=True)), Fraction(0))


def norm_sq(vec: Sequence[Fraction]) -> Fraction:
    return sum((x * x for x in vec), Fraction(0))


def in_unit_cube(point: Sequence[Fraction]) -> bool:
    return all(0 <= x <= 1 for x in point)


def unit_axis(dimension: int, axis: int) -> Vector:
    if not 0 <= axis < dimension:
        raise ValueError(f"axis {axis} out of range for dimension {dimension}")
    return tuple(Fraction(1 if i == axis else 0) for i in range(dimension))
