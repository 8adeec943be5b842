"""Basic dyadic n-cubes inside the unit cube, with exact measure accounting.

A cube is the open box prod_i (c_i * 2**-s, (c_i + 1) * 2**-s).  Measure and
coverage computations use half-open grid semantics, under which dyadic
refinement partitions a cube exactly; this agrees with the open reading up to
null boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Iterator, Sequence

from .rationals import Vector, pow2

# Guard against accidental combinatorial blowups in refinement-based routines.
REFINEMENT_CAP = 4_000_000


class RefinementBlowupError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Basic dyadic cube of side 2**-scale at integer corner within [0,1]^n."""

    dimension: int
    scale: int
    corner: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.scale < 0:
            raise ValueError("scale must be a natural number")
        if len(self.corner) != self.dimension:
            raise ValueError("corner length must match dimension")
        limit = 1 << self.scale
        for c in self.corner:
            if not 0 <= c < limit:
                raise ValueError(f"corner {self.corner} exceeds unit cube at scale {self.scale}")

    def side(self) -> Fraction:
        return pow2(-self.scale)

    def volume(self) -> Fraction:
        return pow2(-self.scale * self.dimension)

    def interval(self, axis: int) -> tuple[Fraction, Fraction]:
        lo = Fraction(self.corner[axis], 1 << self.scale)
        return lo, lo + self.side()

    def center(self) -> Vector:
        return tuple(Fraction(2 * c + 1, 1 << (self.scale + 1)) for c in self.corner)

    def contains_point(self, point: Sequence[Fraction], closed: bool = False) -> bool:
        for axis, x in enumerate(point):
            lo, hi = self.interval(axis)
            inside = lo <= x <= hi if closed else lo < x < hi
            if not inside:
                return False
        return True

    def contains_cube(self, other: "DyadicCube") -> bool:
        """Dyadic cubes are nested or disjoint; containment is corner arithmetic."""
        if other.dimension != self.dimension or other.scale < self.scale:
            return False
        shift = other.scale - self.scale
        return all(oc >> shift == sc for oc, sc in zip(other.corner, self.corner))

    def intersects(self, other: "DyadicCube") -> bool:
        return self.contains_cube(other) or other.contains_cube(self)

    def children(self) -> Iterator["DyadicCube"]:
        base = tuple(c << 1 for c in self.corner)
        for offsets in product((0, 1), repeat=self.dimension):
            corner = tuple(b + o for b, o in zip(base, offsets))
            yield DyadicCube(self.dimension, self.scale + 1, corner)

    def refined_corners(self, target_scale: int) -> Iterator[tuple[int, ...]]:
        """Corners of the subcells at target_scale tiling this cube."""
        if target_scale < self.scale:
            raise ValueError("target scale must refine the cube's scale")
        shift = target_scale - self.scale
        width = 1 << shift
        if width ** self.dimension > REFINEMENT_CAP:
            raise RefinementBlowupError(
                f"refining scale {self.scale} to {target_scale} in dim {self.dimension}"
            )
        base = tuple(c << shift for c in self.corner)
        for offsets in product(range(width), repeat=self.dimension):
            yield tuple(b + o for b, o in zip(base, offsets))

    def to_json(self) -> dict:
        return {"dim": self.dimension, "scale": self.scale, "corner": list(self.corner)}

    @staticmethod
    def from_json(data: dict) -> "DyadicCube":
        return DyadicCube(int(data["dim"]), int(data["scale"]), tuple(int(c) for c in data["corner"]))


def unit_cube(dimension: int) -> DyadicCube:
    return DyadicCube(dimension, 0, (0,) * dimension)


def union_measure(cubes: Iterable[DyadicCube]) -> Fraction:
    """Exact Lebesgue measure of a finite union, overlaps counted once.

    Refines everything to the common (finest) scale and deduplicates the
    resulting grid cells.
    """
    cubes = list(cubes)
    if not cubes:
        return Fraction(0)
    dims = {c.dimension for c in cubes}
    if len(dims) > 1:
        raise ValueError(f"mixed dimensions in cube union: {sorted(dims)}")
    dimension = dims.pop()
    common = max(c.scale for c in cubes)
    total = sum((1 << ((common - c.scale) * dimension)) for c in cubes)
    if total > REFINEMENT_CAP:
        raise RefinementBlowupError(f"union refinement needs {total} cells")
    seen: set[tuple[int, ...]] = set()
    for cube in cubes:
        seen.update(cube.refined_corners(common))
    return len(seen) * pow2(-common * dimension)


def cube_union_contains(cubes: Sequence[DyadicCube], target: DyadicCube) -> bool:
    """Whether the union of cubes covers target (half-open grid semantics)."""
    relevant = [c for c in cubes if c.intersects(target)]
    if any(c.contains_cube(target) for c in relevant):
        return True
    if not relevant:
        return False
    common = max(max(c.scale for c in relevant), target.scale)
    covered: set[tuple[int, ...]] = set()
    for cube in relevant:
        covered.update(cube.refined_corners(common))
    return all(corner in covered for corner in target.refined_corners(common))


def subtract_covered(cube: DyadicCube, covering: Sequence[DyadicCube]) -> list[DyadicCube]:
    """Maximal dyadic subcubes of cube disjoint from every covering cube."""
    overlapping = [c for c in covering if c.intersects(cube)]
    if not overlapping:
        return [cube]
    if any(c.contains_cube(cube) for c in overlapping):
        return []
    pieces: list[DyadicCube] = []
    for child in cube.children():
        pieces.extend(subtract_covered(child, overlapping))
    return pieces
