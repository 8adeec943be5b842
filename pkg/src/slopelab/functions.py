"""Computable functions on the unit n-cube and the concrete families used here.

A function is a pair (evaluator, modulus): the evaluator returns a rational
within 2**-precision of the true value, and the modulus h certifies
||x - y|| <= 2**-h(i)  =>  |f(x) - f(y)| <= 2**-i.  Functions built from
rational data evaluate exactly (error 0) and carry exact=True, which the
martingale and counterexample layers rely on for zero-tolerance checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

from .rationals import (
    Vector,
    as_vector,
    ceil_log2,
    ceil_sqrt,
    dot,
    in_unit_cube,
    is_dyadic,
    norm_sq,
    pow2,
    sqrt_exact,
    sqrt_lower,
    unit_axis,
    vadd,
    vscale,
    vsub,
)

Evaluator = Callable[[Vector, int], Fraction]
Modulus = Callable[[int], int]


@dataclass(frozen=True, eq=False)
class ComputableFunction:
    dimension: int
    evaluator: Evaluator
    modulus: Modulus
    exact: bool = False
    descriptor: dict | None = None

    def eval(self, point: Sequence[Fraction], precision: int = 0) -> Fraction:
        point = tuple(point)
        if len(point) != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates, got {len(point)}")
        return self.evaluator(point, precision)


@dataclass(frozen=True, eq=False)
class VectorFunction:
    """Vector-valued map represented as a tuple of scalar components."""

    components: tuple[ComputableFunction, ...]

    @property
    def dimension(self) -> int:
        return self.components[0].dimension

    def apply(self, point: Sequence[Fraction], precision: int = 0) -> Vector:
        return tuple(c.eval(point, precision) for c in self.components)


def exact_function(
    dimension: int,
    fn: Callable[[Vector], Fraction],
    modulus: Modulus,
    descriptor: dict | None = None,
) -> ComputableFunction:
    """Wrap an exact rational-point evaluator; the precision argument is moot."""
    return ComputableFunction(
        dimension=dimension,
        evaluator=lambda point, _precision: fn(point),
        modulus=modulus,
        exact=True,
        descriptor=descriptor,
    )


def _int_ceil_log2(k: int) -> int:
    # ceil(log2(k)) for k >= 1
    return (k - 1).bit_length()


def linear_form(coeffs: Sequence[Fraction | int | str]) -> ComputableFunction:
    """x |-> <m, x> with exact evaluation and modulus i + ceil(log2(1 + ||m||))."""
    m = as_vector(coeffs)
    if not m:
        raise ValueError("linear form needs dimension >= 1")
    shift = _int_ceil_log2(1 + ceil_sqrt(norm_sq(m)))
    return exact_function(
        len(m),
        lambda point: dot(m, point),
        lambda i: i + shift,
        descriptor={"kind": "linear", "coeffs": [str(c) for c in m]},
    )


def constant_function(value: Fraction | int | str, dimension: int = 1) -> ComputableFunction:
    v = Fraction(value) if not isinstance(value, str) else Fraction(value)
    return exact_function(
        dimension,
        lambda _point: v,
        lambda _i: 0,
        descriptor={"kind": "constant", "dimension": dimension, "value": str(v)},
    )


def clamp_point(point: Sequence[Fraction]) -> Vector:
    """Componentwise min with 1; identity on the unit cube, 1-Lipschitz."""
    return tuple(min(Fraction(1), x) for x in point)


def clamp_p1(dimension: int) -> VectorFunction:
    components = tuple(
        exact_function(
            dimension,
            (lambda axis: lambda point: min(Fraction(1), point[axis]))(i),
            lambda level: level,
            descriptor={"kind": "clamp-component", "axis": i, "dimension": dimension},
        )
        for i in range(dimension)
    )
    return VectorFunction(components)


def clamp_extend(f: ComputableFunction) -> ComputableFunction:
    """f composed with the clamp, so it accepts points outside the cube."""
    return ComputableFunction(
        dimension=f.dimension,
        evaluator=lambda point, precision: f.eval(clamp_point(point), precision),
        modulus=f.modulus,
        exact=f.exact,
        descriptor={"kind": "clamp-extend", "of": f.descriptor},
    )


def sum_functions(parts: Sequence[ComputableFunction]) -> ComputableFunction:
    if not parts:
        raise ValueError("sum of no functions")
    dims = {p.dimension for p in parts}
    if len(dims) > 1:
        raise ValueError("summands must share a dimension")
    count_shift = _int_ceil_log2(len(parts))

    def evaluator(point: Vector, precision: int) -> Fraction:
        inner = precision + count_shift
        return sum((p.eval(point, inner) for p in parts), Fraction(0))

    return ComputableFunction(
        dimension=dims.pop(),
        evaluator=evaluator,
        modulus=lambda i: max(p.modulus(i + count_shift) for p in parts),
        exact=all(p.exact for p in parts),
        descriptor={"kind": "sum", "of": [p.descriptor for p in parts]},
    )


def scale_function(factor: Fraction | int | str, f: ComputableFunction) -> ComputableFunction:
    c = Fraction(factor) if not isinstance(factor, str) else Fraction(factor)
    shift = 0 if c == 0 else max(0, ceil_log2(abs(c)))

    def evaluator(point: Vector, precision: int) -> Fraction:
        if c == 0:
            return Fraction(0)
        return c * f.eval(point, precision + shift)

    return ComputableFunction(
        dimension=f.dimension,
        evaluator=evaluator,
        modulus=lambda i: f.modulus(i + shift),
        exact=f.exact,
        descriptor={"kind": "scale", "by": str(c), "of": f.descriptor},
    )


def kn_decompose(
    f: ComputableFunction, lipschitz_bound: Fraction | int | str
) -> tuple[ComputableFunction, Vector]:
    """Split f = g - <m, .> with g = f + <m, .> orthant-increasing.

    The caller certifies lipschitz_bound >= Lip(f); only lower bounds are
    certifiable from finitely many samples, so no bound is ever inferred.
    """
    bound = Fraction(lipschitz_bound) if not isinstance(lipschitz_bound, str) else Fraction(lipschitz_bound)
    if bound <= 0:
        raise ValueError("Lipschitz bound must be positive")
    m = tuple(bound for _ in range(f.dimension))
    g = sum_functions([f, linear_form(m)])
    return g, m


def lipschitz_lower_bound(f: ComputableFunction, scale: int, precision: int = 64) -> Fraction:
    """Certified lower bound on Lip(f) from axis-adjacent grid slopes.

    Axis steps have exact Euclidean length 2**-scale, so the quotient is a
    rigorous lower bound; inexact evaluations are shrunk by their error.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    n = f.dimension
    step = pow2(-scale)
    width = 1 << scale
    best = Fraction(0)
    err = Fraction(0) if f.exact else 2 * pow2(-precision)
    for corner in product(range(width), repeat=n):
        x = tuple(Fraction(c, width) for c in corner)
        vx = f.eval(x, precision)
        for axis in range(n):
            if corner[axis] + 1 > width:
                continue
            y = tuple(
                Fraction(c + (1 if i == axis else 0), width) for i, c in enumerate(corner)
            )
            vy = f.eval(y, precision)
            diff = abs(vy - vx) - err
            if diff > 0:
                best = max(best, diff / step)
    return best


# ---------------------------------------------------------------------------
# Orthonormal bases and rational isometries


@dataclass(frozen=True)
class GramBasis:
    vectors: tuple[Vector, ...]
    tolerance: Fraction  # measured max |<b_i, b_j> - delta_ij|, 0 on the exact path


def _measure_orthonormality(vectors: Sequence[Vector]) -> Fraction:
    worst = Fraction(0)
    for i, a in enumerate(vectors):
        for j, b in enumerate(vectors):
            target = Fraction(1 if i == j else 0)
            worst = max(worst, abs(dot(a, b) - target))
    return worst


def gram_schmidt_basis(
    u: Sequence[Fraction | int | str], tolerance: Fraction = Fraction(0)
) -> GramBasis:
    """Orthonormal basis with u first; exact for every exactly-unit rational u.

    Exactly-unit vectors are completed by the rational reflection that swaps
    the first standard vector with u, so all entries stay rational.  Inputs
    that are only unit within a declared tolerance go through Gram-Schmidt
    with 80-bit rational square roots; either way the tolerance field records
    the measured orthonormality defect (0 on the exact path).
    """
    first = as_vector(u)
    n = len(first)
    if all(x == 0 for x in first):
        raise ValueError("zero vector cannot start a basis")
    if abs(norm_sq(first) - 1) > max(tolerance, Fraction(0)):
        raise ValueError(f"not a unit vector: ||u||^2 = {norm_sq(first)}")
    if norm_sq(first) == 1:
        e1 = unit_axis(n, 0)
        v = vsub(first, e1)
        vv = norm_sq(v)
        basis = []
        for axis in range(n):
            e = unit_axis(n, axis)
            basis.append(e if vv == 0 else vsub(e, vscale(2 * dot(v, e) / vv, v)))
        return GramBasis(tuple(basis), _measure_orthonormality(basis))
    basis: list[Vector] = [first]
    for axis in range(n):
        if len(basis) == n:
            break
        candidate = unit_axis(n, axis)
        w = candidate
        for b in basis:
            w = vsub(w, vscale(dot(candidate, b) / norm_sq(b), b))
        sq = norm_sq(w)
        if sq == 0:
            continue
        root = sqrt_exact(sq)
        if root is None:
            root = sqrt_lower(sq)
        basis.append(vscale(1 / root, w))
    if len(basis) != n:
        raise ValueError("failed to complete the basis")
    return GramBasis(tuple(basis), _measure_orthonormality(basis))


Matrix = tuple[Vector, ...]


def _identity(n: int) -> Matrix:
    return tuple(unit_axis(n, i) for i in range(n))


def _transpose(m: Matrix) -> Matrix:
    return tuple(tuple(row[i] for row in m) for i in range(len(m[0])))


def _mat_mul(a: Matrix, b: Matrix) -> Matrix:
    bt = _transpose(b)
    return tuple(tuple(dot(row, col) for col in bt) for row in a)


def _mat_apply(m: Matrix, x: Sequence[Fraction]) -> Vector:
    return tuple(dot(row, x) for row in m)


def _invert(matrix: Matrix) -> Matrix:
    n = len(matrix)
    aug = [list(row) + list(unit_axis(n, i)) for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        factor = aug[col][col]
        aug[col] = [v / factor for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                scale = aug[r][col]
                aug[r] = [v - scale * w for v, w in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


@dataclass(frozen=True, eq=False)
class AffineIsometry:
    """x |-> matrix @ x + offset with a stored exact inverse."""

    matrix: Matrix
    offset: Vector
    inverse_matrix: Matrix
    tolerance: Fraction

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    def apply(self, x: Sequence[Fraction]) -> Vector:
        return vadd(_mat_apply(self.matrix, x), self.offset)

    def apply_inverse(self, y: Sequence[Fraction]) -> Vector:
        return _mat_apply(self.inverse_matrix, vsub(y, self.offset))

    def is_exactly_orthogonal(self) -> bool:
        return self.tolerance == 0


def affine_isometry(matrix: Sequence[Sequence[Fraction | int | str]], offset: Sequence[Fraction | int | str] | None = None) -> AffineIsometry:
    rows = tuple(as_vector(row) for row in matrix)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    off = as_vector(offset) if offset is not None else tuple(Fraction(0) for _ in range(n))
    if len(off) != n:
        raise ValueError("offset dimension mismatch")
    gram = _mat_mul(_transpose(rows), rows)
    deviation = max(
        abs(gram[i][j] - (1 if i == j else 0)) for i in range(n) for j in range(n)
    )
    inverse = _transpose(rows) if deviation == 0 else _invert(rows)
    return AffineIsometry(rows, off, inverse, deviation)


def isometry_between(
    u: Sequence[Fraction | int | str],
    v: Sequence[Fraction | int | str],
    offset: Sequence[Fraction | int | str] | None = None,
    tolerance: Fraction = Fraction(0),
) -> AffineIsometry:
    """Linear isometry taking the basis completed from u to the one from v.

    Maps u to v exactly; with exactly orthonormal bases the inverse is the
    transpose and distances are preserved exactly.
    """
    bu = gram_schmidt_basis(u, tolerance)
    bv = gram_schmidt_basis(v, tolerance)
    n = len(bu.vectors)
    matrix = tuple(
        tuple(
            sum((bv.vectors[k][r] * bu.vectors[k][c] for k in range(n)), Fraction(0))
            for c in range(n)
        )
        for r in range(n)
    )
    return affine_isometry(matrix, offset)


def compose_affine(f: ComputableFunction, transform: AffineIsometry) -> ComputableFunction:
    """g(z) = f(P1(matrix @ z + offset)); isometry + clamp are non-expansive."""
    if transform.dimension != f.dimension:
        raise ValueError("dimension mismatch between function and isometry")
    modulus = f.modulus if transform.tolerance == 0 else (lambda i: f.modulus(i + 1))
    return ComputableFunction(
        dimension=f.dimension,
        evaluator=lambda point, precision: f.eval(
            clamp_point(transform.apply(point)), precision
        ),
        modulus=modulus,
        exact=f.exact,
        descriptor={
            "kind": "affine-compose",
            "matrix": [[str(v) for v in row] for row in transform.matrix],
            "offset": [str(v) for v in transform.offset],
            "of": f.descriptor,
        },
    )


# ---------------------------------------------------------------------------
# Measure-preserving coordinate shift


@dataclass(frozen=True)
class ShiftMod1:
    """Adds offset mod 1 to one coordinate; bijective off dyadic points."""

    coordinate: int
    offset: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.offset < 1:
            raise ValueError("offset must lie in [0, 1)")

    def apply(self, point: Sequence[Fraction]) -> tuple[Vector, bool]:
        """Shifted point plus a flag marking dyadic wrap-arounds.

        Dyadic outputs are flagged rather than rejected: the transform is
        only a bijection on non-dyadic points.
        """
        point = tuple(point)
        if not 0 <= self.coordinate < len(point):
            raise IndexError("coordinate index out of range")
        shifted = list(point)
        shifted[self.coordinate] = (point[self.coordinate] + self.offset) % 1
        result = tuple(shifted)
        return result, is_dyadic(result[self.coordinate])

    def inverse(self) -> "ShiftMod1":
        return ShiftMod1(self.coordinate, (1 - self.offset) % 1)


# ---------------------------------------------------------------------------
# Concrete exact families used throughout the tests and the CLI


def piecewise_linear(points: Sequence[tuple[Fraction | str, Fraction | str]]) -> ComputableFunction:
    """Exact one-variable piecewise-linear interpolant through (x, y) pairs."""
    knots = [(Fraction(x) if not isinstance(x, str) else Fraction(x),
              Fraction(y) if not isinstance(y, str) else Fraction(y)) for x, y in points]
    if len(knots) < 2:
        raise ValueError("need at least two knots")
    xs = [x for x, _ in knots]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("knots must have strictly increasing abscissae")
    if xs[0] != 0 or xs[-1] != 1:
        raise ValueError("knots must cover [0, 1]")
    slopes = [
        (y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(knots, knots[1:])
    ]
    max_slope = max((abs(s) for s in slopes), default=Fraction(0))
    shift = max(0, ceil_log2(max_slope)) if max_slope > 0 else 0

    def fn(point: Vector) -> Fraction:
        x = point[0]
        if not 0 <= x <= 1:
            raise ValueError(f"{x} outside [0, 1]")
        for (x0, y0), (x1, y1) in zip(knots, knots[1:]):
            if x <= x1:
                return y0 + (x - x0) * (y1 - y0) / (x1 - x0)
        raise AssertionError("unreachable")

    return exact_function(
        1,
        fn,
        lambda i: i + shift,
        descriptor={
            "kind": "pwlinear",
            "points": [[str(x), str(y)] for x, y in knots],
        },
    )


def square_1d() -> ComputableFunction:
    return exact_function(
        1, lambda p: p[0] * p[0], lambda i: i + 1, descriptor={"kind": "square"}
    )


def cube_1d() -> ComputableFunction:
    return exact_function(
        1, lambda p: p[0] ** 3, lambda i: i + 2, descriptor={"kind": "cube"}
    )


def identity_1d() -> ComputableFunction:
    return linear_form([1])


def abs_distance_1d(center: Fraction | str) -> ComputableFunction:
    c = Fraction(center) if not isinstance(center, str) else Fraction(center)
    return exact_function(
        1, lambda p: abs(p[0] - c), lambda i: i, descriptor={"kind": "abs", "center": str(c)}
    )


def product_xy() -> ComputableFunction:
    return exact_function(
        2, lambda p: p[0] * p[1], lambda i: i + 1, descriptor={"kind": "product"}
    )


def abs_diff_2d() -> ComputableFunction:
    return exact_function(
        2, lambda p: abs(p[0] - p[1]), lambda i: i + 1, descriptor={"kind": "abs-diff"}
    )


def min_x_flip_y() -> ComputableFunction:
    return exact_function(
        2, lambda p: min(p[0], 1 - p[1]), lambda i: i, descriptor={"kind": "min-flip"}
    )


# ---------------------------------------------------------------------------
# Randomized modulus-contract audit


def random_rational_point(rng: random.Random, dimension: int, denominator_scale: int = 10) -> Vector:
    den = 1 << denominator_scale
    return tuple(Fraction(rng.randrange(den + 1), den) for _ in range(dimension))


def modulus_audit(
    f: ComputableFunction,
    pairs: int,
    rng: random.Random,
    levels: Sequence[int] = (1, 2, 4),
    precision: int = 64,
) -> list[dict]:
    """Sample pairs at distance <= 2**-h(i) and check |f(x)-f(y)| <= 2**-i.

    Returns the list of violations (empty on a clean audit).  Comparisons are
    exact for exact functions; otherwise certified error slack is added.
    """
    violations: list[dict] = []
    slack = Fraction(0) if f.exact else 2 * pow2(-precision)
    checked = 0
    attempts = 0
    while checked < pairs and attempts < 20 * pairs:
        attempts += 1
        level = rng.choice(list(levels))
        radius = pow2(-f.modulus(level))
        x = random_rational_point(rng, f.dimension)
        # Axis-aligned displacement keeps the Euclidean distance exact.
        axis = rng.randrange(f.dimension)
        sign = rng.choice((-1, 1))
        step = radius * Fraction(rng.randrange(1, 17), 16) * sign
        y = tuple(
            xi + (step if i == axis else 0) for i, xi in enumerate(x)
        )
        if not in_unit_cube(y):
            continue
        checked += 1
        diff = abs(f.eval(x, precision) - f.eval(y, precision))
        if diff > pow2(-level) + slack:
            violations.append({"x": x, "y": y, "level": level, "difference": diff})
    return violations
