"""Staged refinement of a nested test into tents whose sum defeats one partial.

The builder turns each stage of a nested test into disjoint dyadic cells
whose sides collapse by a factor 8**-m per stage; every cell carries a tent:
a ridge along the first axis (slope exactly +-1 off a thin margin) tapered by
ramps of width eps = 2**-(m+j+1) * side in the remaining axes.  The weighted
sum of the tents is exactly evaluable at rational points, certifiedly
approximable everywhere, and oscillates at the designated point with slopes
growing like 4**m.

Stage cell counts grow like 8**(m^2), so cells are never materialized in
bulk: blocks store closed-form grids, cell indices are arbitrary-precision
integers, and the tent widths eps are kept as power-of-two exponents that are
compared in log space.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .cubes import DyadicCube, cube_union_contains, subtract_covered, union_measure
from .functions import ComputableFunction
from .nullsets import NestedTest
from .rationals import (
    POW2_MATERIALIZE_CAP,
    compare_pow2,
    in_unit_cube,
    is_dyadic,
    pow2,
    pow2_upper,
)


class BuildBudgetError(RuntimeError):
    def __init__(self, stage: int, cube: DyadicCube):
        super().__init__(
            f"stage {stage}: cube {cube.to_json()} is not covered by the "
            f"budget-visible part of the previous stage"
        )
        self.stage = stage
        self.cube = cube


class InsufficientDepthError(RuntimeError):
    def __init__(self, stage: int, needed_scale: int):
        super().__init__(
            f"stage {stage} needs visible cells of side <= 2**-{needed_scale}; "
            f"rebuild with a larger budget or depth"
        )
        self.stage = stage
        self.needed_scale = needed_scale


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    """A uniform grid of cells partitioning one enumerated cube.

    Cells are indexed lexicographically by corner (last axis fastest) and
    numbered start_index, start_index + 1, ... in build order.
    """

    stage: int
    start_index: int
    source: DyadicCube
    cell_scale: int
    delta_scale: int  # scale of the min(source, covering parents) side

    def __post_init__(self) -> None:
        if self.cell_scale < self.source.scale:
            raise PartitionError("cells cannot be coarser than their cube")
        if self.start_index < 1:
            raise PartitionError("cell indices are 1-based")

    @property
    def dimension(self) -> int:
        return self.source.dimension

    @property
    def cells_per_axis(self) -> int:
        return 1 << (self.cell_scale - self.source.scale)

    @property
    def count(self) -> int:
        return self.cells_per_axis ** self.dimension

    @property
    def end_index(self) -> int:
        return self.start_index + self.count - 1

    def cell(self, local: int) -> DyadicCube:
        if not 0 <= local < self.count:
            raise IndexError("local cell index out of range")
        per = self.cells_per_axis
        offsets = []
        rest = local
        for _ in range(self.dimension):
            rest, off = divmod(rest, per)
            offsets.append(off)
        offsets.reverse()
        shift = self.cell_scale - self.source.scale
        corner = tuple(
            (c << shift) + off for c, off in zip(self.source.corner, offsets)
        )
        return DyadicCube(self.dimension, self.cell_scale, corner)

    def locate(self, point: Sequence[Fraction]) -> int | None:
        """Local index of the grid cell whose half-open box holds the point."""
        per = self.cells_per_axis
        shift = self.cell_scale - self.source.scale
        local = 0
        for c_src, x in zip(self.source.corner, point):
            grid = (x.numerator << self.cell_scale) // x.denominator
            off = grid - (c_src << shift)
            if not 0 <= off < per:
                return None
            local = local * per + off
        return local


@dataclass(eq=False)
class StageData:
    blocks: list[Block]
    sources: list[DyadicCube]
    raw: list[DyadicCube]
    exhausted: bool


@dataclass(eq=False)
class Partition:
    """Indexed family of stage cells with provenance, kept in lazy blocks."""

    dimension: int
    stages: list[StageData]

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    def blocks_at(self, stage: int) -> list[Block]:
        return self.stages[stage].blocks

    def cell(self, stage: int, index: int) -> DyadicCube:
        for block in self.blocks_at(stage):
            if block.start_index <= index <= block.end_index:
                return block.cell(index - block.start_index)
        raise IndexError(f"no visible cell {index} at stage {stage}")

    def locate(self, stage: int, point: Sequence[Fraction]) -> tuple[int, DyadicCube] | None:
        for block in self.blocks_at(stage):
            local = block.locate(point)
            if local is not None:
                return block.start_index + local, block.cell(local)
        return None

    def first_cell_scale(self, stage: int) -> int:
        blocks = self.blocks_at(stage)
        if not blocks:
            raise PartitionError(f"stage {stage} has no cells")
        return blocks[0].cell_scale

    def total_cells(self, stage: int) -> int:
        return sum(b.count for b in self.blocks_at(stage))

    def verify_properties(self) -> dict:
        """Exact checks of the four partition properties; raises on failure.

        The side-for-side reading of the fourth property (cell side <= 8**-m
        times the source side) is enforced; its literal mixed-units reading
        (side against source volume) is reported, not enforced.
        """
        report: dict = {"stages": []}
        for m, stage in enumerate(self.stages):
            entry = {"stage": m}
            union_raw = union_measure(stage.raw)
            union_sources = union_measure(stage.sources)
            cells_volume = sum(
                (b.count * pow2(-b.cell_scale * self.dimension) for b in stage.blocks),
                Fraction(0),
            )
            entry["covers_enumeration"] = union_raw == union_sources == cells_volume
            if not entry["covers_enumeration"]:
                raise PartitionError(f"stage {m}: cells do not tile the visible stage")
            for a in range(len(stage.sources)):
                for b in range(a + 1, len(stage.sources)):
                    if stage.sources[a].intersects(stage.sources[b]):
                        raise PartitionError(f"stage {m}: overlapping sources")
            scales = [b.cell_scale for b in stage.blocks]
            entry["volumes_nonincreasing"] = all(
                s1 <= s2 for s1, s2 in zip(scales, scales[1:])
            )
            if not entry["volumes_nonincreasing"]:
                raise PartitionError(f"stage {m}: cell volumes increase along the index")
            if m > 0:
                parents = self.stages[m - 1].blocks
                for block in stage.blocks:
                    relevant = [p for p in parents if p.source.intersects(block.source)]
                    if not cube_union_contains([p.source for p in relevant], block.source):
                        raise PartitionError(f"stage {m}: block escapes the previous stage")
                    for p in relevant:
                        if block.cell_scale < 3 * m + p.cell_scale:
                            raise PartitionError(
                                f"stage {m}: nesting ratio above 8**-{m} against a parent"
                            )
                entry["nested_with_ratio"] = True
            for block in stage.blocks:
                if block.cell_scale < 3 * m + block.source.scale:
                    raise PartitionError(f"stage {m}: cell side above 8**-{m} of its cube")
            entry["side_within_source"] = True
            entry["side_within_source_volume_literal"] = all(
                b.cell_scale >= 3 * m + self.dimension * b.source.scale
                for b in stage.blocks
            )
            report["stages"].append(entry)
        return report


def build_partition(test: NestedTest, depth: int, budget: int) -> Partition:
    """Run the staged subdivision against the budget-visible test.

    Per stage: normalize the enumeration to disjoint cubes, wait for coverage
    by the previous stage's cells, then grid each cube at side
    min(8**-m * delta, previous cell side) with delta the smallest side among
    the cube and its covering parents.
    """
    if depth < 0 or budget < 1:
        raise ValueError("depth must be >= 0 and budget >= 1")
    dimension: int | None = None
    stages: list[StageData] = []
    for m in range(depth + 1):
        stream = test.stream_at(m)
        raw = stream.take(budget)
        exhausted = stream.exhausted_within(budget)
        if dimension is None and raw:
            dimension = raw[0].dimension
        blocks: list[Block] = []
        sources: list[DyadicCube] = []
        next_index = 1
        last_scale: int | None = None
        for cube in raw:
            for piece in subtract_covered(cube, sources):
                if m == 0:
                    delta_scale = piece.scale
                else:
                    parents = [
                        b for b in stages[m - 1].blocks if b.source.intersects(piece)
                    ]
                    if not parents or not cube_union_contains(
                        [b.source for b in parents], piece
                    ):
                        raise BuildBudgetError(m, piece)
                    delta_scale = max(piece.scale, max(b.cell_scale for b in parents))
                cell_scale = 3 * m + delta_scale
                if last_scale is not None:
                    cell_scale = max(cell_scale, last_scale)
                block = Block(
                    stage=m,
                    start_index=next_index,
                    source=piece,
                    cell_scale=cell_scale,
                    delta_scale=delta_scale,
                )
                blocks.append(block)
                sources.append(piece)
                next_index += block.count
                last_scale = cell_scale
        stages.append(StageData(blocks=blocks, sources=sources, raw=raw, exhausted=exhausted))
    if dimension is None:
        raise ValueError("the test enumerated no cubes at all")
    partition = Partition(dimension=dimension, stages=stages)
    partition.verify_properties()
    return partition


# ---------------------------------------------------------------------------
# Tent functions


@dataclass(frozen=True)
class TentFunction:
    """Piecewise-linear bump on a cell: ridge in axis 1, ramps elsewhere.

    eps = 2**-eps_exponent; the exponent can be astronomically large, so all
    comparisons against eps go through log-space arithmetic and the ramp is
    materialized only when a representable point actually lands on it.
    """

    cell: DyadicCube
    stage: int
    index: int
    eps_exponent: int
    degenerate: bool  # stage = index = 0 leaves no plateau; allowed, flagged

    @property
    def peak(self) -> Fraction:
        return self.cell.side() / 2

    def _ramp_factor(self, margin: Fraction) -> Fraction:
        # margin < eps here; the quotient margin / eps needs a real power of 2
        if self.eps_exponent > POW2_MATERIALIZE_CAP:
            raise OverflowError(
                "a representable point landed on an unrepresentably thin ramp"
            )
        return margin * pow2(self.eps_exponent)

    def value(self, point: Sequence[Fraction]) -> Fraction:
        """Exact tent value; zero outside the closed cell."""
        lo, hi = self.cell.interval(0)
        left, right = point[0] - lo, hi - point[0]
        if left <= 0 or right <= 0:
            return Fraction(0)
        result = min(left, right)
        for axis in range(1, self.cell.dimension):
            lo, hi = self.cell.interval(axis)
            near = min(point[axis] - lo, hi - point[axis])
            if near <= 0:
                return Fraction(0)
            if compare_pow2(near, -self.eps_exponent) < 0:
                result *= self._ramp_factor(near)
        return result

    def in_exclusion(self, point: Sequence[Fraction]) -> bool:
        """Whether the point misses the open region with first slope +-1."""
        lo, hi = self.cell.interval(0)
        if not lo < point[0] < hi:
            return True
        for axis in range(1, self.cell.dimension):
            lo, hi = self.cell.interval(axis)
            near = min(point[axis] - lo, hi - point[axis])
            if near <= 0 or compare_pow2(near, -self.eps_exponent) <= 0:
                return True
        return False

    def exclusion_intervals(self, axis: int) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
        """The two removed corner intervals of the axis projection."""
        if axis < 1:
            raise ValueError("the first axis carries the ridge, not ramps")
        eps = pow2(-self.eps_exponent)  # raises beyond the materialization cap
        lo, hi = self.cell.interval(axis)
        return ((lo, lo + eps), (hi - eps, hi))

    def as_function(self) -> ComputableFunction:
        steep = self.stage + self.index  # ramp slope is 2**(stage+index)
        return ComputableFunction(
            dimension=self.cell.dimension,
            evaluator=lambda point, _precision: self.value(point),
            modulus=lambda i: i + steep,
            exact=True,
            descriptor={
                "kind": "tent",
                "cell": self.cell.to_json(),
                "stage": self.stage,
                "index": self.index,
            },
        )


def tent_for(cell: DyadicCube, stage: int, index: int) -> TentFunction:
    """Tent over a cell with ramp width 2**-(stage+index+1) times the side."""
    if stage < 0 or index < 0:
        raise ValueError("stage and index are natural numbers")
    return TentFunction(
        cell=cell,
        stage=stage,
        index=index,
        eps_exponent=stage + index + 1 + cell.scale,
        degenerate=stage + index == 0,
    )


# ---------------------------------------------------------------------------
# The assembled system


@dataclass(frozen=True)
class CertifiedValue:
    """One-sided certificate: the true value lies in [value, value + error]."""

    value: Fraction
    error: Fraction

    @property
    def lower(self) -> Fraction:
        return self.value

    @property
    def upper(self) -> Fraction:
        return self.value + self.error


@dataclass(frozen=True)
class OscillationReport:
    stage: int
    cell_index: int
    cell_side: Fraction
    step: Fraction
    totals: Mapping[int, Fraction]  # sign -> exact first-axis slope of the sum
    per_stage: Mapping[int, tuple[tuple[int, Fraction], ...]]
    bound: Fraction
    vacuous: bool
    passed: bool
    full_stage_slope: bool
    tail_ok: bool
    unbuilt_tail_bound: Fraction


@dataclass(frozen=True)
class ExclusionReport:
    stage: int
    axis: int
    visible_union: Fraction
    visible_slack: Fraction
    interval_count: int
    closed_form_bound: Fraction
    analytic_bound: Fraction

    @property
    def visible_upper(self) -> Fraction:
        return self.visible_union + self.visible_slack

    @property
    def within_bound(self) -> bool:
        return self.visible_upper <= self.closed_form_bound <= self.analytic_bound


def _union_length(intervals: Sequence[tuple[Fraction, Fraction]]) -> Fraction:
    spans = sorted((lo, hi) for lo, hi in intervals if lo < hi)
    total = Fraction(0)
    cur: tuple[Fraction, Fraction] | None = None
    for lo, hi in spans:
        if cur is None or lo > cur[1]:
            if cur is not None:
                total += cur[1] - cur[0]
            cur = (lo, hi)
        else:
            cur = (cur[0], max(cur[1], hi))
    if cur is not None:
        total += cur[1] - cur[0]
    return total


def _int_ceil_log2(k: int) -> int:
    return (k - 1).bit_length()


@dataclass(eq=False)
class TentSystem:
    """Partition plus tents plus the truncated weighted sum.

    cutoff is the first excluded stage index N: the sum runs over stages
    N < m <= depth.  It is caller-supplied: for a genuinely random target the
    construction cannot compute it, so experiments use constructed targets
    whose cutoff is known in advance.
    """

    partition: Partition
    cutoff: int
    budget: int
    test_descriptor: dict | None = None

    @property
    def dimension(self) -> int:
        return self.partition.dimension

    @property
    def depth(self) -> int:
        return self.partition.stage_count - 1

    def tent_at(self, stage: int, index: int) -> TentFunction:
        return tent_for(self.partition.cell(stage, index), stage, index)

    def locate_tent(self, stage: int, point: Sequence[Fraction]) -> TentFunction | None:
        hit = self.partition.locate(stage, point)
        if hit is None:
            return None
        index, cell = hit
        return tent_for(cell, stage, index)

    def stage_value(self, stage: int, point: Sequence[Fraction]) -> Fraction:
        """4**stage times the (single) tent living over the point, else 0."""
        tent = self.locate_tent(stage, point)
        if tent is None:
            return Fraction(0)
        return Fraction(4) ** stage * tent.value(point)

    def truncated_value(self, point: Sequence[Fraction]) -> Fraction:
        """Exact value of the built stages' sum at a rational point."""
        point = tuple(point)
        total = Fraction(0)
        for stage in range(self.cutoff + 1, self.depth + 1):
            total += self.stage_value(stage, point)
        return total

    def as_function(self) -> ComputableFunction:
        def modulus(i: int) -> int:
            if i + 2 > self.depth:
                raise InsufficientDepthError(i + 2, -1)
            return self.modulus_exponent(i + 2)

        return ComputableFunction(
            dimension=self.dimension,
            evaluator=lambda point, _precision: self.truncated_value(point),
            modulus=modulus,
            exact=True,
            descriptor={"kind": "tent-system", "cutoff": self.cutoff, "depth": self.depth},
        )

    # -- certified evaluation -------------------------------------------------

    def _stage_threshold_scale(self, precision: int) -> int:
        # cells of side <= 8**-precision / (precision + 1)
        return 3 * precision + _int_ceil_log2(precision + 2)

    def evaluate(self, point: Sequence[Fraction], precision: int) -> CertifiedValue:
        """Truncated sum with certified one-sided error at most 2**-precision.

        Follows the staged cutoff rule: a stage contributes its located cell
        only when the cell's index precedes the first visibly small cell;
        everything dropped or unseen is covered by exact tail bounds.
        """
        point = tuple(point)
        if not in_unit_cube(point):
            raise ValueError("evaluation point must lie in the unit cube")
        if precision < 0:
            raise ValueError("precision must be a natural number")
        if self.depth < precision:
            # stages beyond the build would contribute up to 2**-(depth+1)
            raise InsufficientDepthError(self.depth + 1, self._stage_threshold_scale(precision))
        threshold = self._stage_threshold_scale(precision)
        value = Fraction(0)
        error = Fraction(0)
        for stage in range(self.cutoff + 1, min(precision, self.depth) + 1):
            data = self.partition.stages[stage]
            cutoff_index: int | None = None
            for block in data.blocks:
                if block.cell_scale >= threshold:
                    cutoff_index = block.start_index
                    break
            if cutoff_index is None and not data.exhausted:
                raise InsufficientDepthError(stage, threshold)
            hit = self.partition.locate(stage, point)
            if hit is not None:
                index, cell = hit
                if cutoff_index is None or index < cutoff_index or data.exhausted:
                    value += Fraction(4) ** stage * tent_for(cell, stage, index).value(point)
            if not data.exhausted:
                # unseen or dropped cells at this stage have side <= 2**-threshold
                error += Fraction(4) ** stage * pow2(-threshold) / 2
        error += pow2(-precision - 1)  # all stages beyond the target precision
        return CertifiedValue(value=value, error=error)

    # -- modulus of continuity ------------------------------------------------

    def modulus_exponent(self, stage: int) -> int:
        """h(m) = floor(-log2 d_{m,1}) + 1, from the first cell of the stage."""
        return self.partition.first_cell_scale(stage) + 1

    def modulus_audit(self, stage: int, pairs: int, rng) -> list[dict]:
        """Check |f(x) - f(y)| <= 2**(-m+2) exactly on sampled pairs.

        Pairs are dyadic and at distance at most 2**-h(m); the law is checked
        on the built truncation.  Returns violations (empty on success).
        """
        h = self.modulus_exponent(stage)
        allowed = pow2(-stage + 2)
        violations = []
        checked = 0
        attempts = 0
        while checked < pairs and attempts < 20 * pairs:
            attempts += 1
            denom = 1 << (h + 6)
            x = tuple(Fraction(rng.randrange(denom + 1), denom) for _ in range(self.dimension))
            axis = rng.randrange(self.dimension)
            sign = rng.choice((-1, 1))
            step = Fraction(sign * rng.randrange(1, 65), 64) * pow2(-h)
            y = tuple(xi + (step if i == axis else 0) for i, xi in enumerate(x))
            if not in_unit_cube(y):
                continue
            checked += 1
            diff = abs(self.truncated_value(x) - self.truncated_value(y))
            if diff > allowed:
                violations.append({"x": x, "y": y, "difference": diff, "allowed": allowed})
        return violations

    # -- the oscillation witness ----------------------------------------------

    def oscillation_check(self, z: Sequence[Fraction], stage: int) -> OscillationReport:
        """Exact first-axis slopes at steps +-(cell side)/4 against 4**(m-1) - 4.

        The target must sit inside a visible stage cell, off its exclusion
        region, with non-dyadic coordinates (dyadic points are excluded from
        the construction wholesale).
        """
        z = tuple(z)
        if any(is_dyadic(c) for c in z):
            raise ValueError("target point must have non-dyadic coordinates")
        if not self.cutoff < stage <= self.depth:
            raise ValueError(f"stage {stage} is outside the built range")
        tent = self.locate_tent(stage, z)
        if tent is None:
            raise ValueError(f"point is not inside any visible stage-{stage} cell")
        if tent.in_exclusion(z):
            raise ValueError("point sits in the exclusion region of its cell")
        d = tent.cell.side()
        step = d / 4
        e1 = tuple(Fraction(1 if i == 0 else 0) for i in range(self.dimension))
        totals: dict[int, Fraction] = {}
        per_stage: dict[int, tuple[tuple[int, Fraction], ...]] = {}
        tail_ok = True
        full_stage = False
        for sign in (1, -1):
            h = sign * step
            shifted = tuple(zi + h * ei for zi, ei in zip(z, e1))
            if not in_unit_cube(shifted):
                continue
            slopes = []
            for k in range(self.cutoff + 1, self.depth + 1):
                s = (self.stage_value(k, shifted) - self.stage_value(k, z)) / h
                slopes.append((k, s))
                if k > stage and abs(s) > pow2(-k + 2):
                    tail_ok = False
                if k == stage and abs(s) == Fraction(4) ** stage:
                    full_stage = True
            totals[sign] = sum((s for _, s in slopes), Fraction(0))
            per_stage[sign] = tuple(slopes)
        if not totals:
            raise ValueError("both oscillation steps leave the unit cube")
        bound = Fraction(4) ** (stage - 1) - 4 if stage >= 1 else Fraction(-4)
        passed = any(abs(t) >= bound for t in totals.values())
        return OscillationReport(
            stage=stage,
            cell_index=self.partition.locate(stage, z)[0],
            cell_side=d,
            step=step,
            totals=totals,
            per_stage=per_stage,
            bound=bound,
            vacuous=bound <= 0,
            passed=passed,
            full_stage_slope=full_stage,
            tail_ok=tail_ok,
            unbuilt_tail_bound=pow2(-self.depth + 2),
        )

    # -- exclusion bookkeeping -------------------------------------------------

    def exclusion_bound(self, stage: int) -> Fraction:
        """Closed-form upper bound for the corner-interval union past a stage.

        Sums 2**-(i+j) * side over all cells of all later stages by blocks;
        unrepresentably small block terms are clamped upward, and stages
        beyond the build contribute their analytic 16**-i envelope.
        """
        total = Fraction(0)
        for i in range(stage + 1, self.depth + 1):
            for block in self.partition.blocks_at(i):
                total += pow2_upper(-(i + block.cell_scale + block.start_index - 1))
        total += Fraction(16) ** (-(self.depth + 1)) * Fraction(16, 15)
        return total

    def exclusion_visible(self, stage: int, axis: int, per_block: int = 16) -> ExclusionReport:
        """Exact union of the budget-visible corner intervals along an axis.

        Visible means the first per_block cells of every block; intervals too
        thin to materialize are clamped into an explicit slack term.
        """
        if not 1 <= axis < self.dimension:
            raise ValueError("corner intervals live on axes >= 1")
        intervals: list[tuple[Fraction, Fraction]] = []
        slack = Fraction(0)
        count = 0
        for i in range(stage + 1, self.depth + 1):
            for block in self.partition.blocks_at(i):
                for local in range(min(per_block, block.count)):
                    tent = tent_for(block.cell(local), i, block.start_index + local)
                    count += 2
                    if tent.eps_exponent > POW2_MATERIALIZE_CAP:
                        slack += 2 * pow2_upper(-tent.eps_exponent)
                        continue
                    intervals.extend(tent.exclusion_intervals(axis))
        return ExclusionReport(
            stage=stage,
            axis=axis,
            visible_union=_union_length(intervals),
            visible_slack=slack,
            interval_count=count,
            closed_form_bound=self.exclusion_bound(stage),
            analytic_bound=pow2(-3 * stage),
        )

    # -- persistence -----------------------------------------------------------

    def to_bundle(self) -> dict:
        return {
            "format": "tent-system/1",
            "dimension": self.dimension,
            "cutoff": self.cutoff,
            "budget": self.budget,
            "test": self.test_descriptor,
            "stages": [
                {
                    "exhausted": s.exhausted,
                    "raw": [c.to_json() for c in s.raw],
                    "sources": [c.to_json() for c in s.sources],
                    "blocks": [
                        {
                            "start_index": b.start_index,
                            "source": b.source.to_json(),
                            "cell_scale": b.cell_scale,
                            "delta_scale": b.delta_scale,
                        }
                        for b in s.blocks
                    ],
                }
                for s in self.partition.stages
            ],
        }


def system_from_bundle(bundle: dict) -> TentSystem:
    """Rebuild a system from its bundle; partition properties are re-verified."""
    if bundle.get("format") != "tent-system/1":
        raise ValueError("unrecognized bundle format")
    stages = []
    for m, s in enumerate(bundle["stages"]):
        blocks = [
            Block(
                stage=m,
                start_index=int(b["start_index"]),
                source=DyadicCube.from_json(b["source"]),
                cell_scale=int(b["cell_scale"]),
                delta_scale=int(b["delta_scale"]),
            )
            for b in s["blocks"]
        ]
        stages.append(
            StageData(
                blocks=blocks,
                sources=[DyadicCube.from_json(c) for c in s["sources"]],
                raw=[DyadicCube.from_json(c) for c in s["raw"]],
                exhausted=bool(s["exhausted"]),
            )
        )
    partition = Partition(dimension=int(bundle["dimension"]), stages=stages)
    partition.verify_properties()
    return TentSystem(
        partition=partition,
        cutoff=int(bundle["cutoff"]),
        budget=int(bundle["budget"]),
        test_descriptor=bundle.get("test"),
    )


def build_tent_system(
    test: NestedTest, depth: int, cutoff: int = 0, budget: int = 8
) -> TentSystem:
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    partition = build_partition(test, depth, budget)
    return TentSystem(
        partition=partition,
        cutoff=cutoff,
        budget=budget,
        test_descriptor=test.descriptor,
    )
