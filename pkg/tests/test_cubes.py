from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slopelab.cubes import (
    DyadicCube,
    cube_union_contains,
    subtract_covered,
    union_measure,
    unit_cube,
)
from slopelab.rationals import pow2


def brute_grid_measure(cubes, common_scale):
    """Independent oracle: count grid cells of side 2**-common_scale inside."""
    if not cubes:
        return Fraction(0)
    dim = cubes[0].dimension
    count = 0
    total = 1 << (common_scale * dim)
    for flat in range(total):
        corner = []
        rest = flat
        for _ in range(dim):
            rest, c = divmod(rest, 1 << common_scale)
            corner.append(c)
        center = tuple(Fraction(2 * c + 1, 1 << (common_scale + 1)) for c in corner)
        if any(cube.contains_point(center) for cube in cubes):
            count += 1
    return count * pow2(-common_scale * dim)


small_cubes = st.builds(
    lambda scale, corner_seed, dim: DyadicCube(
        dim, scale, tuple((corner_seed >> (4 * i)) % (1 << scale) for i in range(dim))
    ),
    st.integers(0, 3),
    st.integers(0, 2**12),
    st.integers(1, 2),
)


def test_cube_validation():
    with pytest.raises(ValueError):
        DyadicCube(2, 1, (0, 2))
    with pytest.raises(ValueError):
        DyadicCube(0, 0, ())
    with pytest.raises(ValueError):
        DyadicCube(1, -1, (0,))


def test_geometry_accessors():
    cube = DyadicCube(2, 2, (1, 3))
    assert cube.side() == Fraction(1, 4)
    assert cube.volume() == Fraction(1, 16)
    assert cube.interval(1) == (Fraction(3, 4), Fraction(1))
    assert cube.contains_point((Fraction(3, 10), Fraction(4, 5)))
    assert not cube.contains_point((Fraction(1, 4), Fraction(4, 5)))
    assert cube.contains_point((Fraction(1, 4), Fraction(4, 5)), closed=True)


def test_containment_is_corner_arithmetic():
    big = DyadicCube(2, 1, (1, 0))
    small = DyadicCube(2, 3, (5, 2))
    assert big.contains_cube(small)
    assert not small.contains_cube(big)
    assert big.contains_cube(big)
    assert not big.contains_cube(DyadicCube(2, 3, (3, 2)))


def test_two_halves_tile_the_interval():
    halves = [DyadicCube(1, 1, (0,)), DyadicCube(1, 1, (1,))]
    assert union_measure(halves) == 1


def test_repeated_cube_counted_once():
    cube = DyadicCube(2, 1, (0, 1))
    assert union_measure([cube, cube]) == cube.volume()


def test_overlapping_squares_measure():
    # [0,1/2)^2 union [1/4,3/4)^2 has measure 7/16
    squares = [
        DyadicCube(2, 1, (0, 0)),
        DyadicCube(2, 2, (1, 1)),
        DyadicCube(2, 2, (1, 2)),
        DyadicCube(2, 2, (2, 1)),
        DyadicCube(2, 2, (2, 2)),
    ]
    assert union_measure(squares) == Fraction(7, 16)


def test_mixed_dimensions_rejected():
    with pytest.raises(ValueError):
        union_measure([unit_cube(1), unit_cube(2)])


@given(st.lists(small_cubes, min_size=1, max_size=5))
@settings(max_examples=50, deadline=None)
def test_union_measure_matches_brute_grid(cubes):
    dim = cubes[0].dimension
    cubes = [c for c in cubes if c.dimension == dim]
    measured = union_measure(cubes)
    common = max(c.scale for c in cubes)
    assert measured == brute_grid_measure(cubes, common)


@given(st.lists(small_cubes, min_size=2, max_size=5))
@settings(max_examples=50, deadline=None)
def test_union_measure_monotone_and_subadditive(cubes):
    dim = cubes[0].dimension
    cubes = [c for c in cubes if c.dimension == dim]
    total = union_measure(cubes)
    assert union_measure(cubes[:-1]) <= total
    assert total <= sum(c.volume() for c in cubes)


def test_union_coverage():
    target = DyadicCube(1, 1, (0,))
    quarters = [DyadicCube(1, 2, (0,)), DyadicCube(1, 2, (1,))]
    assert cube_union_contains(quarters, target)
    assert not cube_union_contains(quarters[:1], target)
    assert cube_union_contains([unit_cube(1)], target)


def test_subtract_covered_splits_to_disjoint_pieces():
    whole = unit_cube(2)
    corner = DyadicCube(2, 1, (0, 0))
    pieces = subtract_covered(whole, [corner])
    assert len(pieces) == 3
    assert union_measure(pieces) == Fraction(3, 4)
    assert all(not p.intersects(corner) for p in pieces)
    assert subtract_covered(corner, [whole]) == []
    assert subtract_covered(corner, []) == [corner]
