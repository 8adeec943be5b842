"""Binary expansions, bit-source interleaving, and Cauchy name validation.

Bit sources are total deterministic query interfaces: the same index always
yields the same bit, and any finite prefix is obtainable.  Points with a
dyadic coordinate are rejected from expansion because both of their binary
expansions would be legitimate, which would break interleaving determinism.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .rationals import Vector, is_dyadic, pow2

Bits = tuple[int, ...]


class DyadicCoordinateError(ValueError):
    """Raised when a point offered for binary expansion has a dyadic coordinate."""


@dataclass(frozen=True, eq=False)
class BitSource:
    """Deterministic total map index -> {0, 1}."""

    fn: Callable[[int], int]
    label: str = "bits"

    def bit(self, index: int) -> int:
        if index < 0:
            raise IndexError("bit index must be nonnegative")
        value = self.fn(index)
        if value not in (0, 1):
            raise ValueError(f"{self.label}: bit {index} evaluated to {value!r}")
        return value

    def prefix(self, length: int) -> Bits:
        return tuple(self.bit(k) for k in range(length))


def constant_bits(bit: int) -> BitSource:
    if bit not in (0, 1):
        raise ValueError("constant bit must be 0 or 1")
    return BitSource(lambda _k: bit, label=f"const{bit}")


def pattern_bits(pattern: Sequence[int], repeat: bool = True) -> BitSource:
    """Finite pattern, optionally repeated; zero-padded when not repeated."""
    pat = tuple(int(b) for b in pattern)
    if not pat or any(b not in (0, 1) for b in pat):
        raise ValueError("pattern must be a nonempty 0/1 sequence")
    if repeat:
        return BitSource(lambda k: pat[k % len(pat)], label="pattern")
    return BitSource(lambda k: pat[k] if k < len(pat) else 0, label="pattern")


def bits_of_fraction(value: Fraction) -> BitSource:
    """The binary expansion of value in [0, 1]; dyadic values are rejected."""
    if not 0 <= value <= 1:
        raise ValueError(f"{value} lies outside [0, 1]")
    if is_dyadic(value):
        raise DyadicCoordinateError(f"{value} is dyadic; expansion is ambiguous")
    num, den = value.numerator, value.denominator

    def bit(k: int) -> int:
        return ((num << (k + 1)) // den) & 1

    return BitSource(bit, label=f"0.{num}/{den}")


def bits_of_point(point: Sequence[Fraction]) -> list[BitSource]:
    """Coordinatewise binary expansions of a point of the unit cube."""
    return [bits_of_fraction(coord) for coord in point]


def fraction_from_bits(bits: Sequence[int]) -> Fraction:
    """Sum of bit(k) * 2**-(k+1): the dyadic left end of the coded interval."""
    total = 0
    for b in bits:
        total = (total << 1) | int(b)
    return Fraction(total, 1 << len(bits)) if bits else Fraction(0)


def interleave(sources: Sequence[BitSource]) -> BitSource:
    """Round-robin merge: output bit n*k + j is source j's bit k."""
    if not sources:
        raise ValueError("interleave requires at least one source")
    srcs = tuple(sources)
    n = len(srcs)
    return BitSource(lambda k: srcs[k % n].bit(k // n), label=f"interleave{n}")


def project_component(source: BitSource, count: int, component: int) -> BitSource:
    """Inverse of interleave: every count-th bit starting at component."""
    if not 0 <= component < count:
        raise ValueError("component out of range")
    return BitSource(lambda k: source.bit(count * k + component), label="project")


# ---------------------------------------------------------------------------
# Cauchy names


@dataclass(frozen=True, eq=False)
class CauchyName:
    """Rational approximations q_k with ||q_k - q_n|| <= 2**-n for k >= n."""

    dimension: int
    approx: Callable[[int], Vector]
    _cache: dict = field(default_factory=dict, repr=False)

    def at(self, index: int) -> Vector:
        if index not in self._cache:
            value = tuple(self.approx(index))
            if len(value) != self.dimension:
                raise ValueError("approximation has wrong dimension")
            self._cache[index] = value
        return self._cache[index]


def validate_cauchy(name: CauchyName, depth: int) -> tuple[int, int] | None:
    """Exact check of the convergence law up to depth; witness or None.

    Returns (n, k) with ||q_k - q_n|| > 2**-n for the first violation found,
    or None when every pair n <= k <= depth satisfies the law.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    for n in range(depth + 1):
        bound = pow2(-2 * n)
        qn = name.at(n)
        for k in range(n, depth + 1):
            qk = name.at(k)
            dist_sq = sum((a - b) ** 2 for a, b in zip(qk, qn))
            if dist_sq > bound:
                return (n, k)
    return None
