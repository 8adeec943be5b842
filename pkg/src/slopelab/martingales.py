"""Exact-rational betting strategies on binary strings.

A martingale assigns each finite 0/1 string a nonnegative capital obeying the
fairness law 2*B(sigma) = B(sigma0) + B(sigma1) exactly.  Slope martingales
read the capital off a monotone function: the value on sigma is the slope of
the function over the dyadic interval coded by sigma, and fairness is then an
algebraic identity that holds for any function, monotone or not.

Success of a strategy is a liminf over an infinite play, so simulations only
report finite-depth capital statistics, never a randomness verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Mapping, Sequence

from .bits import Bits, BitSource, bits_of_fraction, fraction_from_bits, interleave
from .functions import ComputableFunction
from .rationals import Vector, pow2


class MonotonicityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Martingale:
    """Nonnegative exact capital function on binary strings."""

    fn: Callable[[Bits], Fraction]
    label: str = "martingale"

    def at(self, sigma: Sequence[int]) -> Fraction:
        sigma = tuple(int(b) for b in sigma)
        if any(b not in (0, 1) for b in sigma):
            raise ValueError("strings are over {0, 1}")
        value = self.fn(sigma)
        if value < 0:
            raise ValueError(f"{self.label}: negative capital {value} at {sigma}")
        return value


def check_fairness(m: Martingale, depth: int) -> Bits | None:
    """Exact fairness check on all strings of length < depth; witness or None."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    for length in range(depth):
        for sigma in product((0, 1), repeat=length):
            if 2 * m.at(sigma) != m.at(sigma + (0,)) + m.at(sigma + (1,)):
                return sigma
    return None


def constant_martingale(value: Fraction | int | str = 1) -> Martingale:
    v = Fraction(value)
    if v < 0:
        raise ValueError("capital must be nonnegative")
    return Martingale(lambda _s: v, label="constant")


def all_on_ones_martingale() -> Martingale:
    """Stake everything on the next bit being 1; capital 2**|sigma| on 11...1."""
    return Martingale(
        lambda s: Fraction(1 << len(s)) if all(b == 1 for b in s) else Fraction(0),
        label="all-on-ones",
    )


def table_martingale(values: Mapping[str, Fraction | str], depth: int) -> Martingale:
    """Martingale from an explicit table on strings of length <= depth.

    Strings beyond the table keep their parent's capital (a valid extension).
    The table itself is NOT validated here; run check_fairness to audit it.
    """
    parsed = {k: Fraction(v) for k, v in values.items()}

    def fn(sigma: Bits) -> Fraction:
        key = "".join(map(str, sigma))
        while key not in parsed:
            if not key:
                raise ValueError("table lacks the empty string")
            key = key[:-1]
        return parsed[key]

    return Martingale(fn, label=f"table(depth={depth})")


# ---------------------------------------------------------------------------
# Slope martingales


def dyadic_interval(sigma: Bits) -> tuple[Fraction, Fraction]:
    """The dyadic interval of reals whose expansion extends sigma."""
    left = fraction_from_bits(sigma)
    return left, left + pow2(-len(sigma))


def interval_slope(f: ComputableFunction, sigma: Bits) -> Fraction:
    """Slope of f over the interval coded by sigma; exact for exact f.

    2*slope(sigma) = slope(sigma0) + slope(sigma1) holds for ANY f: the
    average of the halves' slopes telescopes to the whole interval's slope.
    """
    if f.dimension != 1:
        raise ValueError("slope martingales read one-variable functions")
    if not f.exact:
        raise ValueError("exact slopes need an exact function; use approx_interval_slope")
    left, right = dyadic_interval(sigma)
    return (f.eval((right,)) - f.eval((left,))) / (right - left)


def approx_interval_slope(f: ComputableFunction, sigma: Bits, precision: int) -> Fraction:
    """Certified slope over [sigma]: within 2**-precision of the true slope."""
    left, right = dyadic_interval(sigma)
    inner = precision + len(sigma) + 1
    return (f.eval((right,), inner) - f.eval((left,), inner)) / (right - left)


def audit_monotone(f: ComputableFunction, scale: int = 6) -> None:
    """Reject f unless it is nondecreasing on the dyadic grid at scale."""
    width = 1 << scale
    values = [f.eval((Fraction(k, width),)) for k in range(width + 1)]
    for k, (a, b) in enumerate(zip(values, values[1:])):
        if b < a:
            raise MonotonicityError(
                f"f({Fraction(k + 1, width)}) < f({Fraction(k, width)}) on the audit grid"
            )


def slope_martingale(f: ComputableFunction, audit_scale: int = 6) -> Martingale:
    """Capital(sigma) = slope of the monotone f over [sigma]; nonnegative, fair."""
    if not f.exact:
        raise ValueError("slope_martingale needs exact dyadic evaluation")
    audit_monotone(f, audit_scale)
    return Martingale(lambda sigma: interval_slope(f, sigma), label="slope")


# ---------------------------------------------------------------------------
# Uniform martingales: an oracle-sequence parameter with a use bound


@dataclass(frozen=True, eq=False)
class OracleFunction:
    """Family g(Y, h) of one-variable functions indexed by an oracle sequence.

    evaluate(prefix, h, precision) must be within 2**-precision of g(Y, h)
    whenever len(prefix) >= use(precision); longer prefixes must not move the
    result beyond that error.
    """

    evaluate: Callable[[Bits, Fraction, int], Fraction]
    use: Callable[[int], int]
    label: str = "oracle-fn"


def oracle_free(f: ComputableFunction) -> OracleFunction:
    """Wrap a one-variable function as an oracle family that ignores its oracle."""
    if f.dimension != 1:
        raise ValueError("expected a one-variable function")
    return OracleFunction(
        evaluate=lambda _prefix, h, precision: f.eval((h,), precision),
        use=lambda _precision: 0,
        label="oracle-free",
    )


def axis_section_family(f: ComputableFunction, axis: int) -> OracleFunction:
    """g(Y, h) = f(point decoded from Y with h inserted at the axis).

    The oracle interleaves the other n-1 coordinates; decoding L bits per
    coordinate perturbs the point by at most sqrt(n) * 2**-L, which the
    modulus turns into a certified output error.
    """
    n = f.dimension
    if not 0 <= axis < n:
        raise ValueError("axis out of range")
    others = n - 1
    pad = max(1, (n - 1).bit_length() + 1)

    def coords_bits(precision: int) -> int:
        return f.modulus(precision + 1) + pad

    def use(precision: int) -> int:
        return others * coords_bits(precision)

    def evaluate(prefix: Bits, h: Fraction, precision: int) -> Fraction:
        length = coords_bits(precision)
        if len(prefix) < others * length:
            raise ValueError(
                f"oracle prefix of {len(prefix)} bits is below the use bound {others * length}"
            )
        decoded = []
        for j in range(others):
            decoded.append(fraction_from_bits(tuple(prefix[j + others * k] for k in range(length))))
        point = decoded[:axis] + [h] + decoded[axis:]
        return f.eval(tuple(point), precision + 1)

    return OracleFunction(evaluate=evaluate, use=use, label=f"axis-section({axis})")


@dataclass(frozen=True, eq=False)
class UniformMartingale:
    """Slope martingale of the oracle section, queried through a use bound.

    At finite precision the fairness residual |2v(sigma) - v(sigma0) -
    v(sigma1)| stays below 3 * 2**-precision; it vanishes in the limit.
    """

    family: OracleFunction
    oracle: BitSource | None = None

    def _inner_precision(self, sigma_len: int, precision: int) -> int:
        return precision + sigma_len + 2

    def use_bound(self, sigma_len: int, precision: int) -> int:
        return self.family.use(self._inner_precision(sigma_len, precision))

    def value_with_prefix(self, prefix: Bits, sigma: Sequence[int], precision: int) -> Fraction:
        """Certified within 2**-(precision+1); deterministic in the used prefix."""
        sigma = tuple(int(b) for b in sigma)
        needed = self.use_bound(len(sigma), precision)
        if len(prefix) < needed:
            raise ValueError(f"prefix has {len(prefix)} bits; use bound is {needed}")
        used = tuple(prefix[:needed])
        inner = self._inner_precision(len(sigma), precision)
        left, right = dyadic_interval(sigma)
        lo = self.family.evaluate(used, left, inner)
        hi = self.family.evaluate(used, right, inner)
        return (hi - lo) / (right - left)

    def value(self, sigma: Sequence[int], precision: int) -> Fraction:
        if self.oracle is None:
            raise ValueError("no oracle attached; use value_with_prefix")
        sigma = tuple(int(b) for b in sigma)
        prefix = self.oracle.prefix(self.use_bound(len(sigma), precision))
        return self.value_with_prefix(prefix, sigma, precision)


def uniform_slope_martingale(
    family: OracleFunction,
    oracle: BitSource | None = None,
    audit_scale: int = 4,
    audit_precision: int = 24,
) -> UniformMartingale:
    """Uniform martingale M(Y, sigma) = slope of g(Y, .) over [sigma].

    The section must be monotone for every oracle; here it is audited on a
    dyadic grid for the attached oracle, within certified tolerance.
    """
    m = UniformMartingale(family, oracle)
    if oracle is not None:
        width = 1 << audit_scale
        prefix = oracle.prefix(family.use(audit_precision))
        tol = 2 * pow2(-audit_precision)
        values = [
            family.evaluate(prefix, Fraction(k, width), audit_precision) for k in range(width + 1)
        ]
        for a, b in zip(values, values[1:]):
            if b < a - tol:
                raise MonotonicityError("oracle section decreases on the audit grid")
    return m


# ---------------------------------------------------------------------------
# Betting simulations


@dataclass(frozen=True)
class BetRun:
    """Finite-depth capital trajectory; a diagnostic, never a randomness verdict."""

    trajectory: tuple[Fraction, ...]
    max_capital: Fraction
    min_tail_capital: Fraction
    threshold_crossings: Mapping[Fraction, int | None]

    def to_csv(self) -> str:
        lines = ["length,capital"]
        for k, capital in enumerate(self.trajectory):
            lines.append(f"{k},{capital.numerator}/{capital.denominator}")
        return "\n".join(lines) + "\n"


def run_bet(
    m: Martingale,
    source: BitSource,
    depth: int,
    thresholds: Sequence[Fraction] = (),
) -> BetRun:
    """Play m against the source's prefixes of length 0..depth."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    prefix = source.prefix(depth)
    trajectory = tuple(m.at(prefix[:k]) for k in range(depth + 1))
    tail = trajectory[(depth + 1) // 2 :]
    crossings: dict[Fraction, int | None] = {}
    for threshold in thresholds:
        crossings[threshold] = next(
            (k for k, c in enumerate(trajectory) if c >= threshold), None
        )
    return BetRun(
        trajectory=trajectory,
        max_capital=max(trajectory),
        min_tail_capital=min(tail),
        threshold_crossings=crossings,
    )


# ---------------------------------------------------------------------------
# Axis sections of multivariate functions


@dataclass(frozen=True, eq=False)
class AxisSection:
    """One-variable restriction along an axis plus its oracle encoding."""

    section: ComputableFunction
    oracle: BitSource
    base_point: Vector
    axis: int


def section_along_axis(f: ComputableFunction, z: Sequence[Fraction], axis: int) -> AxisSection:
    """The section h |-> f(y + h e_axis) with y = z minus its axis coordinate.

    The oracle interleaves the binary expansions of the other coordinates,
    which must be non-dyadic; with no other coordinates the encoding is the
    all-zeros source.
    """
    z = tuple(z)
    if len(z) != f.dimension:
        raise ValueError("point dimension mismatch")
    if not 0 <= axis < f.dimension:
        raise ValueError("axis out of range")
    y = tuple(Fraction(0) if i == axis else zi for i, zi in enumerate(z))

    def fn(point: Vector, precision: int) -> Fraction:
        h = point[0]
        target = tuple(h if i == axis else yi for i, yi in enumerate(y))
        return f.eval(target, precision)

    section = ComputableFunction(
        dimension=1,
        evaluator=fn,
        modulus=f.modulus,
        exact=f.exact,
        descriptor={"kind": "axis-section", "axis": axis, "of": f.descriptor},
    )
    other_coords = [zi for i, zi in enumerate(z) if i != axis]
    if other_coords:
        oracle = interleave([bits_of_fraction(c) for c in other_coords])
    else:
        oracle = BitSource(lambda _k: 0, label="empty-encoding")
    return AxisSection(section=section, oracle=oracle, base_point=y, axis=axis)
