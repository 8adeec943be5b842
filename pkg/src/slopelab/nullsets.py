"""Effective null sets as data: cube streams, nested tests, lattice removals.

A cube stream enumerates basic dyadic cubes with exact running measure; a
nested test is a stage-indexed family of streams whose stages nest, audited
at finite budget.  The compact-set construction removes centered squares on
ever finer lattices; its stage measures are exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .cubes import DyadicCube, cube_union_contains, union_measure
from .rationals import Vector, parse_rational

StreamFactory = Callable[[], Iterator[DyadicCube]]


@dataclass(eq=False)
class CubeStream:
    """Deterministic enumeration of dyadic cubes with exact measure-so-far."""

    factory: StreamFactory
    label: str = "stream"
    _emitted: list[DyadicCube] = field(default_factory=list, repr=False)
    _iterator: Iterator[DyadicCube] | None = field(default=None, repr=False)
    _exhausted: bool = field(default=False, repr=False)
    _consumed: int = field(default=0, repr=False)

    def _pull(self) -> DyadicCube | None:
        if self._iterator is None:
            self._iterator = self.factory()
        try:
            cube = next(self._iterator)
        except StopIteration:
            self._exhausted = True
            return None
        self._emitted.append(cube)
        return cube

    def next(self) -> DyadicCube | None:
        """The next cube of the enumeration, or None once it ends."""
        if self._consumed < len(self._emitted):
            cube = self._emitted[self._consumed]
        else:
            cube = self._pull()
        if cube is not None:
            self._consumed += 1
        return cube

    @property
    def emitted(self) -> list[DyadicCube]:
        """The accumulated cover enumerated so far."""
        return list(self._emitted)

    def measure_so_far(self) -> Fraction:
        return union_measure(self._emitted)

    def take(self, budget: int) -> list[DyadicCube]:
        """First budget cubes (fewer when the enumeration ends)."""
        while len(self._emitted) < budget and not self._exhausted:
            self._pull()
        return list(self._emitted[:budget])

    def exhausted_within(self, budget: int) -> bool:
        """True iff the enumeration provably ends within budget cubes."""
        if len(self.take(budget)) < budget:
            return True
        return len(self.take(budget + 1)) <= budget

    def measure_after(self, steps: int) -> Fraction:
        """Exact measure of the union of the first `steps` cubes."""
        return union_measure(self.take(steps))


def stream_from_cubes(cubes: Iterable[DyadicCube] | StreamFactory, label: str = "stream") -> CubeStream:
    if callable(cubes):
        return CubeStream(cubes, label)
    fixed = list(cubes)
    return CubeStream(lambda: iter(fixed), label)


@dataclass(frozen=True, eq=False)
class NestedTest:
    """Stage m |-> cube stream for G_m, with G_{m+1} nested inside G_m."""

    stage_factory: Callable[[int], CubeStream]
    label: str = "nested-test"
    descriptor: dict | None = None

    def stream_at(self, stage: int) -> CubeStream:
        if stage < 0:
            raise ValueError("stage must be a natural number")
        return self.stage_factory(stage)


def audit_nesting(test: NestedTest, stages: int, budget: int) -> tuple[int, DyadicCube] | None:
    """Check each budget-visible cube of stage m+1 is covered one stage up.

    Returns (stage, cube) for the first uncovered cube, or None when the
    budget-visible parts nest all the way down.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    previous = test.stream_at(0).take(budget)
    for stage in range(1, stages + 1):
        current = test.stream_at(stage).take(budget)
        for cube in current:
            if not cube_union_contains(previous, cube):
                return (stage, cube)
        previous = current
    return None


# ---------------------------------------------------------------------------
# Ready-made nested tests


def constant_unit_test(dimension: int) -> NestedTest:
    def factory(_stage: int) -> CubeStream:
        return stream_from_cubes([DyadicCube(dimension, 0, (0,) * dimension)], label="unit")

    return NestedTest(factory, label="constant-unit", descriptor={"kind": "constant-unit", "dimension": dimension})


def concentric_test(point: Sequence[Fraction | str], scale_step: int = 2) -> NestedTest:
    """Stage m = the single dyadic cube of side 2**-(scale_step*m) around the point.

    The point must avoid dyadic coordinates so each stage has a unique cube.
    """
    center = tuple(parse_rational(c) for c in point)
    if any(not 0 < c < 1 for c in center):
        raise ValueError("point must be interior to the unit cube")

    def factory(stage: int) -> CubeStream:
        scale = scale_step * stage
        corner = tuple((c.numerator << scale) // c.denominator for c in center)
        return stream_from_cubes(
            [DyadicCube(len(center), scale, corner)], label=f"concentric-{stage}"
        )

    return NestedTest(
        factory,
        label="concentric",
        descriptor={
            "kind": "concentric",
            "point": [str(c) for c in center],
            "scale_step": scale_step,
        },
    )


def explicit_test(stages: Sequence[Sequence[DyadicCube]]) -> NestedTest:
    fixed = [list(stage) for stage in stages]

    def factory(stage: int) -> CubeStream:
        cubes = fixed[stage] if stage < len(fixed) else fixed[-1]
        return stream_from_cubes(cubes, label=f"explicit-{stage}")

    return NestedTest(
        factory,
        label="explicit",
        descriptor={
            "kind": "explicit",
            "stages": [[c.to_json() for c in stage] for stage in fixed],
        },
    )


# ---------------------------------------------------------------------------
# Compact null-set construction on shrinking lattices


@dataclass(frozen=True)
class DoreMalevaParams:
    """Odd lattice moduli N_i and removal widths p_i with 1 <= p_i <= N_i.

    The divergence of sum 1/N_i^2 and p_i/N_i -> 0 are analytic certificates
    supplied by the constructor, not summed numerically.
    """

    n_at: Callable[[int], int]
    p_at: Callable[[int], Fraction]
    p_raw_at: Callable[[int], Fraction]
    reciprocal_squares_diverge: bool
    ratio_vanishes: bool
    label: str = "params"

    def validate_stage(self, i: int) -> None:
        n = self.n_at(i)
        p = self.p_at(i)
        if i < 1:
            raise ValueError("stages are 1-based")
        if n <= 1 or n % 2 == 0:
            raise ValueError(f"N_{i} = {n} must be an odd integer > 1")
        if i > 1 and self.n_at(i - 1) > n:
            raise ValueError("N must be nondecreasing")
        if not 1 <= p <= n:
            raise ValueError(f"p_{i} = {p} violates 1 <= p <= N_{i} = {n}")

    def cell_pitch(self, i: int) -> Fraction:
        """d_{i-1}: the stage-i lattice pitch (cell side)."""
        return self.ball_side_denominator(i - 1)

    def ball_side_denominator(self, i: int) -> Fraction:
        """d_i = product of 1/N_k for k <= i (d_0 = 1)."""
        d = Fraction(1)
        for k in range(1, i + 1):
            d /= self.n_at(k)
        return d


def default_dore_maleva_params() -> DoreMalevaParams:
    """The staircase 3,3,3,5,5,5,5,5,7,... with raw width 4, clamped to N_i - 1.

    The raw width exceeds N_1 = 3 at early stages, so the effective width is
    min(4, N_i - 1): this preserves 1 <= p_i <= N_i, the vanishing ratio, and
    strictly interior balls, and is recorded alongside the raw value.
    """

    def n_at(i: int) -> int:
        if i < 1:
            raise ValueError("stages are 1-based")
        n, remaining = 3, i
        while remaining > n:
            remaining -= n
            n += 2
        return n

    raw = Fraction(4)
    return DoreMalevaParams(
        n_at=n_at,
        p_at=lambda i: min(raw, Fraction(n_at(i) - 1)),
        p_raw_at=lambda _i: raw,
        reciprocal_squares_diverge=True,
        ratio_vanishes=True,
        label="default-staircase",
    )


def explicit_dore_maleva_params(
    n_values: Sequence[int],
    p_values: Sequence[Fraction | int | str],
    reciprocal_squares_diverge: bool = False,
    ratio_vanishes: bool = False,
) -> DoreMalevaParams:
    ns = list(n_values)
    ps = [parse_rational(p) for p in p_values]
    if len(ns) != len(ps):
        raise ValueError("N and p must have equal length")

    def n_at(i: int) -> int:
        return ns[i - 1]

    def p_at(i: int) -> Fraction:
        return ps[i - 1]

    return DoreMalevaParams(
        n_at=n_at,
        p_at=p_at,
        p_raw_at=p_at,
        reciprocal_squares_diverge=reciprocal_squares_diverge,
        ratio_vanishes=ratio_vanishes,
        label="explicit",
    )


Rect = tuple[Fraction, Fraction, Fraction, Fraction]  # x0, x1, y0, y1


@dataclass(frozen=True)
class LatticeStage:
    """Stage-i removal: centered squares on the cell lattice inside [0,1]^2.

    The lattice is (pitch/2, pitch/2) + pitch * Z^2 with pitch d_{i-1}: each
    stage-(i-1) cell loses a centered square of side p_i * d_i, a fraction
    (p_i/N_i)^2 of the cell, exactly.
    """

    stage: int
    pitch: Fraction
    radius: Fraction  # sup-norm ball radius p_i d_i / 2
    cells_per_axis: int
    removed_fraction_per_cell: Fraction
    whole_cell: bool  # p_i == N_i: the ball fills its cell (degenerate)

    def centers(self) -> Iterator[Vector]:
        half = self.pitch / 2
        for row in range(self.cells_per_axis):
            for col in range(self.cells_per_axis):
                yield (half + col * self.pitch, half + row * self.pitch)

    def rectangles(self) -> Iterator[Rect]:
        for cx, cy in self.centers():
            yield (cx - self.radius, cx + self.radius, cy - self.radius, cy + self.radius)

    def count(self) -> int:
        return self.cells_per_axis ** 2


def dore_maleva_stage(params: DoreMalevaParams, stage: int) -> LatticeStage:
    params.validate_stage(stage)
    n = params.n_at(stage)
    p = params.p_at(stage)
    pitch = params.cell_pitch(stage)
    d_i = pitch / n
    per_axis = pitch.denominator // pitch.numerator  # pitch = 1/(N_1...N_{i-1})
    return LatticeStage(
        stage=stage,
        pitch=pitch,
        radius=p * d_i / 2,
        cells_per_axis=per_axis,
        removed_fraction_per_cell=(p / n) ** 2,
        whole_cell=p == n,
    )


def dore_maleva_measure(params: DoreMalevaParams, through_stage: int) -> Fraction:
    """Exact remaining measure of the unit square after stages 1..k.

    Under the cell-centered lattice the stage removals are measure-independent
    and the remainder is the product of (1 - (p_i/N_i)^2); the rectangle-sweep
    and grid oracles confirm this against direct union accounting at small k.
    """
    if through_stage < 0:
        raise ValueError("stage count must be >= 0")
    remaining = Fraction(1)
    for i in range(1, through_stage + 1):
        params.validate_stage(i)
        remaining *= 1 - (params.p_at(i) / params.n_at(i)) ** 2
    return remaining


def dore_maleva_rectangles(
    params: DoreMalevaParams, through_stage: int, cap: int = 200_000
) -> list[Rect]:
    rects: list[Rect] = []
    for i in range(1, through_stage + 1):
        stage = dore_maleva_stage(params, i)
        if len(rects) + stage.count() > cap:
            raise ValueError(f"stage {i} would exceed the rectangle cap {cap}")
        rects.extend(stage.rectangles())
    return rects


def rect_union_area(rects: Sequence[Rect]) -> Fraction:
    """Exact area of a union of axis-aligned rational rectangles (sweep)."""
    rects = [r for r in rects if r[0] < r[1] and r[2] < r[3]]
    if not rects:
        return Fraction(0)
    xs = sorted({x for r in rects for x in (r[0], r[1])})
    total = Fraction(0)
    for x0, x1 in zip(xs, xs[1:]):
        active = sorted(
            (r[2], r[3]) for r in rects if r[0] <= x0 and r[1] >= x1
        )
        if not active:
            continue
        covered = Fraction(0)
        cur_lo, cur_hi = active[0]
        for lo, hi in active[1:]:
            if lo > cur_hi:
                covered += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        covered += cur_hi - cur_lo
        total += (x1 - x0) * covered
    return total


def dore_maleva_measure_by_sweep(params: DoreMalevaParams, through_stage: int) -> Fraction:
    """Remaining measure via explicit rectangle-union accounting (small k)."""
    removed = rect_union_area(dore_maleva_rectangles(params, through_stage))
    return 1 - removed


def stage_below_half(params: DoreMalevaParams, limit: int = 64) -> int:
    """First stage whose cumulative remaining measure drops below 1/2."""
    remaining = Fraction(1)
    for i in range(1, limit + 1):
        remaining *= 1 - (params.p_at(i) / params.n_at(i)) ** 2
        if remaining < Fraction(1, 2):
            return i
    raise ValueError(f"measure stays >= 1/2 through stage {limit}")
