import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slopelab.bits import bits_of_fraction, constant_bits, pattern_bits
from slopelab.functions import (
    abs_distance_1d,
    cube_1d,
    identity_1d,
    linear_form,
    piecewise_linear,
    square_1d,
)
from slopelab.martingales import (
    Martingale,
    MonotonicityError,
    all_on_ones_martingale,
    approx_interval_slope,
    audit_monotone,
    axis_section_family,
    check_fairness,
    constant_martingale,
    dyadic_interval,
    interval_slope,
    run_bet,
    section_along_axis,
    slope_martingale,
    table_martingale,
    uniform_slope_martingale,
)
from slopelab.rationals import pow2

F = Fraction


def random_monotone_pwlinear(rng: random.Random):
    knots = sorted(rng.sample(range(1, 32), 4))
    xs = [F(0)] + [F(k, 32) for k in knots] + [F(1)]
    ys = [F(0)]
    for _ in range(len(xs) - 1):
        ys.append(ys[-1] + F(rng.randrange(0, 9), 8))
    return piecewise_linear(list(zip(xs, ys)))


def test_constant_martingale_fair():
    assert check_fairness(constant_martingale(1), 8) is None


def test_all_on_ones_values_and_fairness():
    m = all_on_ones_martingale()
    assert m.at((1, 1, 1)) == 8
    assert m.at((1, 0, 1)) == 0
    assert check_fairness(m, 10) is None


def test_slope_martingale_of_identity_is_one():
    m = slope_martingale(identity_1d())
    for sigma in ((), (0,), (1, 0, 1), (1,) * 6):
        assert m.at(sigma) == 1


def test_slope_martingale_of_square():
    m = slope_martingale(square_1d())
    assert m.at(()) == 1
    assert m.at((0,)) == F(1, 2)
    assert m.at((1,)) == F(3, 2)
    assert check_fairness(m, 10) is None


def test_slope_martingale_of_constant_is_zero():
    m = slope_martingale(piecewise_linear([(0, F(1, 3)), (1, F(1, 3))]))
    for sigma in ((), (0, 1), (1, 1, 0)):
        assert m.at(sigma) == 0


def test_slope_martingale_rejects_decreasing():
    with pytest.raises(MonotonicityError):
        slope_martingale(piecewise_linear([(0, 1), (1, 0)]))
    with pytest.raises(MonotonicityError):
        audit_monotone(abs_distance_1d(F(1, 2)))


def test_corrupted_table_fails_with_witness():
    table = {"": "1/1", "0": "1/2", "1": "3/2", "00": "1/2", "01": "1/2", "10": "9/7", "11": "3/2"}
    m = table_martingale(table, 2)
    assert check_fairness(m, 3) == (1,)


def test_fairness_is_algebraic_for_arbitrary_exact_functions():
    # the identity 2*slope(I) = slope(left) + slope(right) needs no monotonicity
    for f in (square_1d(), cube_1d(), abs_distance_1d(F(1, 3))):
        for length in range(7):
            for sigma in product((0, 1), repeat=length):
                assert 2 * interval_slope(f, sigma) == interval_slope(f, sigma + (0,)) + interval_slope(f, sigma + (1,))


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_random_monotone_pwlinear_slope_martingales_fair(seed):
    f = random_monotone_pwlinear(random.Random(seed))
    m = slope_martingale(f)
    assert check_fairness(m, 7) is None


def test_dyadic_interval_and_approx_slope():
    assert dyadic_interval((1, 0)) == (F(1, 2), F(3, 4))
    f = square_1d()
    exact = interval_slope(f, (1, 0))
    assert approx_interval_slope(f, (1, 0), 20) == exact


def test_run_bet_trajectories():
    flat = run_bet(constant_martingale(1), constant_bits(0), 8)
    assert flat.trajectory == (F(1),) * 9
    assert flat.max_capital == 1 and flat.min_tail_capital == 1

    doubling = run_bet(all_on_ones_martingale(), constant_bits(1), 10, thresholds=(F(8),))
    assert doubling.trajectory == tuple(F(2**k) for k in range(11))
    assert doubling.threshold_crossings[F(8)] == 3

    busted = run_bet(all_on_ones_martingale(), pattern_bits([1, 1, 0]), 9)
    assert busted.trajectory[:3] == (F(1), F(2), F(4))
    assert all(c == 0 for c in busted.trajectory[3:])


def test_bet_run_csv_format():
    run = run_bet(constant_martingale(F(1, 3)), constant_bits(0), 2)
    assert run.to_csv() == "length,capital\n0,1/3\n1,1/3\n2,1/3\n"


def test_run_bet_uses_exactly_the_prefix():
    calls = []

    def probe(sigma):
        calls.append(tuple(sigma))
        return F(1)

    run_bet(Martingale(probe), pattern_bits([0, 1]), 4)
    assert calls == [(), (0,), (0, 1), (0, 1, 0), (0, 1, 0, 1)]


# ---------------------------------------------------------------------------
# Uniform martingales


def test_uniform_martingale_ignoring_oracle():
    from slopelab.martingales import oracle_free

    m = uniform_slope_martingale(oracle_free(identity_1d()), bits_of_fraction(F(1, 3)))
    for sigma in ((), (1,), (0, 1, 1)):
        assert m.value(sigma, 10) == 1


def test_uniform_martingale_of_affine_section():
    f = linear_form([2, 3])
    family = axis_section_family(f, 0)
    oracle = bits_of_fraction(F(1, 3))  # encodes the second coordinate
    m = uniform_slope_martingale(family, oracle)
    for sigma in ((), (1,), (0, 0), (1, 0, 1)):
        assert m.value(sigma, 12) == 2


def test_uniform_martingale_fairness_residual_bounded():
    f = linear_form([2, 3])
    m = uniform_slope_martingale(axis_section_family(f, 1), bits_of_fraction(F(1, 7)))
    precision = 10
    for sigma in ((), (0,), (1, 1)):
        residual = abs(
            2 * m.value(sigma, precision)
            - m.value(tuple(sigma) + (0,), precision)
            - m.value(tuple(sigma) + (1,), precision)
        )
        assert residual <= 3 * pow2(-precision)


def test_uniform_martingale_use_bound_stability():
    f = linear_form([2, 3])
    family = axis_section_family(f, 0)
    oracle = bits_of_fraction(F(2, 3))
    m = uniform_slope_martingale(family, oracle)
    sigma, precision = (1, 0), 8
    need = m.use_bound(len(sigma), precision)
    base = m.value_with_prefix(oracle.prefix(need), sigma, precision)
    extended = m.value_with_prefix(oracle.prefix(need + 40), sigma, precision)
    assert base == extended  # truncation makes stability exact
    with pytest.raises(ValueError):
        m.value_with_prefix(oracle.prefix(max(need - 1, 0)), sigma, precision)


def test_two_oracles_agreeing_on_use_bound_give_identical_values():
    f = linear_form([2, 3])
    family = axis_section_family(f, 0)
    sigma, precision = (0, 1), 8
    m = uniform_slope_martingale(family)
    need = m.use_bound(len(sigma), precision)
    prefix = bits_of_fraction(F(1, 3)).prefix(need)
    # a different continuation beyond the use bound
    other = tuple(prefix) + (1, 1, 1, 1)
    assert m.value_with_prefix(prefix, sigma, precision) == m.value_with_prefix(
        other, sigma, precision
    )


def test_uniform_monotonicity_audit_rejects_decreasing_section():
    from slopelab.martingales import oracle_free

    with pytest.raises(MonotonicityError):
        uniform_slope_martingale(
            oracle_free(piecewise_linear([(0, 1), (1, 0)])), constant_bits(0)
        )


# ---------------------------------------------------------------------------
# Axis sections


def test_section_along_axis_values_and_slope():
    f = linear_form([2, 3])
    z = (F(1, 3), F(1, 7))
    sec = section_along_axis(f, z, 1)
    # section slope is the coefficient of the chosen axis
    assert (sec.section.eval((F(1, 2),)) - sec.section.eval((F(1, 4),))) / F(1, 4) == 3
    # section at h = z_i recovers f(z)
    assert sec.section.eval((z[1],)) == f.eval(z)
    # encoding carries the other coordinate's bits
    assert sec.oracle.prefix(6) == bits_of_fraction(F(1, 3)).prefix(6)


def test_section_rejects_dyadic_companions():
    f = linear_form([2, 3])
    with pytest.raises(ValueError):
        section_along_axis(f, (F(1, 2), F(1, 3)), 1)


def test_section_of_orthant_increasing_function_is_monotone():
    from slopelab.functions import abs_diff_2d, kn_decompose

    g, _ = kn_decompose(abs_diff_2d(), 2)
    sec = section_along_axis(g, (F(1, 3), F(1, 5)), 0)
    values = [sec.section.eval((F(k, 16),)) for k in range(17)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_one_dimensional_section_has_trivial_encoding():
    f = square_1d()
    sec = section_along_axis(f, (F(1, 3),), 0)
    assert sec.oracle.prefix(4) == (0, 0, 0, 0)
    assert sec.section.eval((F(1, 4),)) == F(1, 16)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_slope_average_identity_for_arbitrary_pwlinear(seed):
    rng = random.Random(seed)
    knots = sorted(rng.sample(range(1, 32), 3))
    xs = [F(0)] + [F(k, 32) for k in knots] + [F(1)]
    ys = [F(rng.randrange(-16, 17), 8) for _ in xs]  # not monotone in general
    f = piecewise_linear(list(zip(xs, ys)))
    for length in range(6):
        for sigma in product((0, 1), repeat=length):
            assert 2 * interval_slope(f, sigma) == interval_slope(
                f, sigma + (0,)
            ) + interval_slope(f, sigma + (1,))
