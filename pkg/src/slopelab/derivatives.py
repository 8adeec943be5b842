"""Slope functionals and finite-depth differentiability probes.

Differentiability at a point sits two quantifiers beyond anything decidable,
so every limit statement here becomes a pair of finite procedures: an exact
refutation (a replayable witness) or consistency-to-depth (a shrinking
bracket).  Verdicts never claim more than the grids they examined.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .functions import (
    AffineIsometry,
    ComputableFunction,
    clamp_extend,
    compose_affine,
    isometry_between,
)
from .rationals import (
    Vector,
    as_vector,
    dot,
    in_unit_cube,
    norm_sq,
    pow2,
    unit_axis,
    vadd,
    vscale,
)

CONSISTENT = "consistent-to-depth"
VIOLATED = "violated"


class WSearchError(RuntimeError):
    """No translation in the search box lands the pulled-back point in the cube."""


@dataclass(frozen=True)
class SlopeReport:
    point: Vector
    kind: str  # "axis" | "direction"
    descriptor: object
    step: Fraction
    value: Fraction
    error: Fraction


@dataclass(frozen=True)
class ProbeVerdict:
    op: str
    status: str
    depth: int
    witness: Mapping | None
    bracket: object  # op-specific brackets of exact rationals

    @property
    def violated(self) -> bool:
        return self.status == VIOLATED


def dyadic_schedule(depth: int, start: int = 2) -> list[Fraction]:
    """Default shrinking steps 2**-k, k = start..depth (exact dyadics)."""
    if depth < start:
        raise ValueError("depth must reach the first step")
    return [pow2(-k) for k in range(start, depth + 1)]


def _eval(f: ComputableFunction, point: Vector, precision: int) -> Fraction:
    return f.eval(point, precision)


def _eval_error(f: ComputableFunction, precision: int) -> Fraction:
    return Fraction(0) if f.exact else pow2(-precision)


def slope_axis(
    f: ComputableFunction, x: Sequence[Fraction], axis: int, h: Fraction, precision: int = 64
) -> SlopeReport:
    """Difference quotient (f(x + h*e_axis) - f(x)) / h, error propagated."""
    x = tuple(x)
    if h == 0:
        raise ValueError("zero step")
    shifted = tuple(xi + (h if i == axis else 0) for i, xi in enumerate(x))
    if not in_unit_cube(x) or not in_unit_cube(shifted):
        raise ValueError(f"step {h} along axis {axis} leaves the unit cube")
    value = (_eval(f, shifted, precision) - _eval(f, x, precision)) / h
    return SlopeReport(x, "axis", axis, h, value, 2 * _eval_error(f, precision) / abs(h))


def slope_row(
    f: ComputableFunction, x: Sequence[Fraction], b: Fraction, precision: int = 64
) -> tuple[SlopeReport, ...]:
    """Row of axis slopes sharing one step b."""
    return tuple(slope_axis(f, x, axis, b, precision) for axis in range(f.dimension))


def slope_dir(
    f: ComputableFunction,
    x: Sequence[Fraction],
    v: Sequence[Fraction],
    h: Fraction,
    precision: int = 64,
) -> SlopeReport:
    """Directional difference quotient (f(x + h*v) - f(x)) / h."""
    x, v = tuple(x), as_vector(v)
    if h == 0:
        raise ValueError("zero step")
    shifted = vadd(x, vscale(h, v))
    if not in_unit_cube(x) or not in_unit_cube(shifted):
        raise ValueError(f"step {h} along {v} leaves the unit cube")
    value = (_eval(f, shifted, precision) - _eval(f, x, precision)) / h
    return SlopeReport(x, "direction", v, h, value, 2 * _eval_error(f, precision) / abs(h))


def partial_probe(
    f: ComputableFunction,
    x: Sequence[Fraction],
    axis: int,
    schedule: Sequence[Fraction],
    threshold: Fraction | None = None,
    precision: int = 64,
) -> ProbeVerdict:
    """Two-sided slopes over a shrinking schedule, bracketing the partial.

    Reports VIOLATED when the oscillation (max - min) over the tail half of
    the schedule reaches the caller's threshold: a finite witness that the
    lower and upper partials separate.  Infeasible steps are skipped; a
    schedule with no feasible step is an error.
    """
    x = tuple(x)
    if not schedule:
        raise ValueError("schedule must be nonempty")
    observations: list[tuple[int, Fraction, Fraction]] = []
    for rank, h in enumerate(schedule):
        for signed in (h, -h):
            try:
                report = slope_axis(f, x, axis, signed, precision)
            except ValueError:
                continue
            observations.append((rank, signed, report.value))
    if not observations:
        raise ValueError("schedule leaves the cube at every step")
    tail_start = len(schedule) // 2
    tail = [obs for obs in observations if obs[0] >= tail_start] or observations
    lo = min(tail, key=lambda t: t[2])
    hi = max(tail, key=lambda t: t[2])
    oscillation = hi[2] - lo[2]
    bracket = (lo[2], hi[2])
    if threshold is not None and oscillation >= threshold:
        witness = {
            "op": "partial",
            "axis": axis,
            "point": x,
            "low": {"step": lo[1], "slope": lo[2]},
            "high": {"step": hi[1], "slope": hi[2]},
            "oscillation": oscillation,
            "threshold": threshold,
        }
        return ProbeVerdict("partial", VIOLATED, len(schedule), witness, bracket)
    return ProbeVerdict("partial", CONSISTENT, len(schedule), None, bracket)


@dataclass(frozen=True)
class BasisReduction:
    """Directional slope rewritten as a first-axis slope of a pulled-back map."""

    g: ComputableFunction
    z: Vector
    transform: AffineIsometry
    offset: Vector
    identity_holds: bool
    checked_steps: tuple[Fraction, ...]
    failures: tuple[dict, ...]


def _default_w_grid(dimension: int) -> list[Vector]:
    values = [Fraction(k, 8) for k in range(-8, 9)]
    return [tuple(c) for c in product(values, repeat=dimension)]


def dir_derivative_via_basis(
    f: ComputableFunction,
    x: Sequence[Fraction],
    u: Sequence[Fraction | int | str],
    w: Sequence[Fraction | int | str] | None = None,
    t_panel: Sequence[Fraction] | None = None,
    precision: int = 64,
) -> BasisReduction:
    """Reduce the slope along u at x to a first-axis slope of g = f^∘(Θ+w).

    Θ maps e_1 to u; z = Θ^-1(x - w) must land in the unit cube (searched on
    a dyadic grid when w is omitted).  The identity check verifies
    (g(z + t e_1) - g(z))/t = (f^(x + t u) - f^(x))/t exactly over the panel,
    where f^ is the clamp extension of f.
    """
    x = tuple(x)
    direction = as_vector(u)
    transform = isometry_between(unit_axis(f.dimension, 0), direction)
    candidates: Sequence[Vector]
    if w is not None:
        candidates = [as_vector(w)]
    else:
        candidates = _default_w_grid(f.dimension)
    chosen = None
    for cand in candidates:
        z = transform.apply_inverse(tuple(a - b for a, b in zip(x, cand)))
        if in_unit_cube(z):
            chosen = (cand, z)
            break
    if chosen is None:
        raise WSearchError(
            "no offset in the search box pulls the point into the unit cube; widen the search"
        )
    offset, z = chosen
    f_hat = clamp_extend(f)
    shifted = AffineIsometry(
        transform.matrix, offset, transform.inverse_matrix, transform.tolerance
    )
    g = compose_affine(f, shifted)
    panel = tuple(t_panel) if t_panel is not None else tuple(pow2(-k) for k in range(1, 13))
    failures = []
    e1 = unit_axis(f.dimension, 0)
    for t in panel:
        if t <= 0:
            raise ValueError("panel steps must be positive")
        lhs = (g.eval(vadd(z, vscale(t, e1)), precision) - g.eval(z, precision)) / t
        rhs = (
            f_hat.eval(vadd(x, vscale(t, direction)), precision) - f_hat.eval(x, precision)
        ) / t
        if lhs != rhs:
            failures.append({"t": t, "lhs": lhs, "rhs": rhs})
    return BasisReduction(
        g=g,
        z=z,
        transform=shifted,
        offset=offset,
        identity_holds=not failures,
        checked_steps=panel,
        failures=tuple(failures),
    )


def linearity_defect(
    f: ComputableFunction,
    x: Sequence[Fraction],
    u: Sequence[Fraction | int | str],
    v: Sequence[Fraction | int | str],
    max_step: Fraction,
    depth: int = 6,
    threshold: Fraction | None = None,
    precision: int = 64,
) -> ProbeVerdict:
    """Minimum of |δ^u + δ^v - δ^{u+v}| over dyadic steps <= max_step.

    A caller threshold q turns the minimum into a finite membership surrogate
    for the closed set where additivity of slopes fails by at least q.
    """
    x = tuple(x)
    du, dv = as_vector(u), as_vector(v)
    duv = vadd(du, dv)
    defects: list[tuple[Fraction, Fraction]] = []
    for k in range(1, depth + 1):
        h = pow2(-k)
        if h > max_step:
            continue
        try:
            su = slope_dir(f, x, du, h, precision).value
            sv = slope_dir(f, x, dv, h, precision).value
            suv = slope_dir(f, x, duv, h, precision).value
        except ValueError:
            continue
        defects.append((h, abs(su + sv - suv)))
    if not defects:
        raise ValueError("empty feasible grid")
    h_min, best = min(defects, key=lambda t: t[1])
    worst = max(d for _, d in defects)
    witness = {
        "op": "defect",
        "point": x,
        "u": du,
        "v": dv,
        "step_at_min": h_min,
        "defects": defects,
        "threshold": threshold,
    }
    status = VIOLATED if threshold is not None and best >= threshold else CONSISTENT
    return ProbeVerdict("defect", status, len(defects), witness, (best, worst))


def diff_class_a(
    f: ComputableFunction,
    x: Sequence[Fraction],
    depth: int,
    separation: Fraction | None = None,
    precision: int = 64,
) -> ProbeVerdict:
    """Per-axis brackets of the candidate partials from two-sided grid slopes.

    VIOLATED when some axis' tail slopes stay separated by at least the
    caller's threshold: a finite witness that the lower partial falls short
    of the upper one.
    """
    x = tuple(x)
    brackets: list[tuple[Fraction, Fraction]] = []
    worst: dict | None = None
    for axis in range(f.dimension):
        observations: list[tuple[int, Fraction, Fraction]] = []
        for k in range(1, depth + 1):
            h = pow2(-k)
            for signed in (h, -h):
                try:
                    observations.append((k, signed, slope_axis(f, x, axis, signed, precision).value))
                except ValueError:
                    continue
        if not observations:
            raise ValueError(f"no feasible step along axis {axis}")
        tail_start = depth // 2 + 1
        tail = [obs for obs in observations if obs[0] >= tail_start] or observations
        lo = min(tail, key=lambda t: t[2])
        hi = max(tail, key=lambda t: t[2])
        brackets.append((lo[2], hi[2]))
        if separation is not None and hi[2] - lo[2] >= separation:
            candidate = {
                "op": "class-a",
                "axis": axis,
                "point": x,
                "lower": {"step": lo[1], "slope": lo[2]},
                "upper": {"step": hi[1], "slope": hi[2]},
                "separation": hi[2] - lo[2],
                "threshold": separation,
            }
            if worst is None or candidate["separation"] > worst["separation"]:
                worst = candidate
    if worst is not None:
        return ProbeVerdict("class-a", VIOLATED, depth, worst, tuple(brackets))
    return ProbeVerdict("class-a", CONSISTENT, depth, None, tuple(brackets))


def first_order_remainder(
    f: ComputableFunction,
    x: Vector,
    h: Vector,
    b: Fraction,
    precision: int = 64,
) -> Fraction:
    """|f(x+h) - f(x) - row(x, b) . h| with the slope row at step b (exact for exact f)."""
    row = [r.value for r in slope_row(f, x, b, precision)]
    fx = f.eval(x, precision)
    fxh = f.eval(vadd(x, h), precision)
    return abs(fxh - fx - dot(row, h))


def _grid_vectors(dimension: int, depth: int) -> list[Vector]:
    vectors = []
    for k in range(1, depth + 1):
        h = pow2(-k)
        for signs in product((-1, 0, 1), repeat=dimension):
            if all(s == 0 for s in signs):
                continue
            vectors.append(tuple(h * s for s in signs))
    return vectors


def diff_class_b(
    f: ComputableFunction,
    x: Sequence[Fraction],
    depth: int,
    precision: int = 64,
) -> ProbeVerdict:
    """Bounded form of the first-order limit: ∀ε ∃δ ∀h ∀b remainder <= ε||h||.

    ε and δ range over 2**-1..2**-depth; h and b grids extend two levels
    deeper so small δ are never vacuous.  A finite grid can only refute the
    bounded form, never prove the limit.
    """
    x = tuple(x)
    h_vectors = [h for h in _grid_vectors(f.dimension, depth + 2) if in_unit_cube(vadd(x, h))]
    b_steps = [
        b
        for k in range(1, depth + 3)
        for b in (pow2(-k), -pow2(-k))
        if all(in_unit_cube(vadd(x, vscale(b, unit_axis(f.dimension, i)))) for i in range(f.dimension))
    ]
    if not h_vectors or not b_steps:
        raise ValueError("no feasible probe steps at this point")
    value_cache: dict[Vector, Fraction] = {}

    def cached(point: Vector) -> Fraction:
        if point not in value_cache:
            value_cache[point] = f.eval(point, precision)
        return value_cache[point]

    fx = cached(x)
    rows: dict[Fraction, list[Fraction]] = {}
    for b in b_steps:
        rows[b] = [
            (cached(tuple(xi + (b if i == axis else 0) for i, xi in enumerate(x))) - fx) / b
            for axis in range(f.dimension)
        ]
    remainders: dict[tuple[Vector, Fraction], tuple[Fraction, Fraction]] = {}
    for h in h_vectors:
        fxh = cached(vadd(x, h))
        hsq = norm_sq(h)
        for b in b_steps:
            remainders[(h, b)] = (abs(fxh - fx - dot(rows[b], h)), hsq)
    for e in range(1, depth + 1):
        eps = pow2(-e)
        found_delta = False
        smallest_delta_failure: dict | None = None
        for d in range(1, depth + 1):
            delta = pow2(-d)
            delta_sq = delta * delta
            ok = True
            for (h, b), (rem, hsq) in remainders.items():
                if hsq >= delta_sq or b * b >= delta_sq:
                    continue
                if rem * rem > eps * eps * hsq:
                    ok = False
                    smallest_delta_failure = {
                        "op": "class-b",
                        "point": x,
                        "epsilon": eps,
                        "delta": delta,
                        "h": h,
                        "b": b,
                        "row": tuple(rows[b]),
                        "remainder": rem,
                    }
                    break
            if ok:
                found_delta = True
                break
        if not found_delta:
            return ProbeVerdict("class-b", VIOLATED, depth, smallest_delta_failure, None)
    return ProbeVerdict("class-b", CONSISTENT, depth, None, None)


def replay(f: ComputableFunction, verdict: ProbeVerdict, precision: int = 64) -> bool:
    """Re-evaluate a violation witness exactly; True iff it reproduces."""
    if not verdict.violated or verdict.witness is None:
        return False
    w = verdict.witness
    if w["op"] == "partial":
        lo = slope_axis(f, w["point"], w["axis"], w["low"]["step"], precision).value
        hi = slope_axis(f, w["point"], w["axis"], w["high"]["step"], precision).value
        return lo == w["low"]["slope"] and hi == w["high"]["slope"] and hi - lo >= w["threshold"]
    if w["op"] == "class-a":
        lo = slope_axis(f, w["point"], w["axis"], w["lower"]["step"], precision).value
        hi = slope_axis(f, w["point"], w["axis"], w["upper"]["step"], precision).value
        return hi - lo == w["separation"] and w["separation"] >= w["threshold"]
    if w["op"] == "class-b":
        rem = first_order_remainder(f, w["point"], w["h"], w["b"], precision)
        hsq = norm_sq(w["h"])
        return rem == w["remainder"] and rem * rem > w["epsilon"] ** 2 * hsq
    if w["op"] == "defect":
        point, u, v = w["point"], w["u"], w["v"]
        for h, defect in w["defects"]:
            su = slope_dir(f, point, u, h, precision).value
            sv = slope_dir(f, point, v, h, precision).value
            suv = slope_dir(f, point, vadd(u, v), h, precision).value
            if abs(su + sv - suv) != defect:
                return False
        return w["threshold"] is None or min(d for _, d in w["defects"]) >= w["threshold"]
    raise ValueError(f"unknown witness kind {w['op']!r}")
