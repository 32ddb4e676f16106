import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from connexion import (
    astar_bounds,
    astar_series,
    astar_sqrt,
    compute_coeffs,
    eval_P,
    first_order_rhs,
    integral_residual,
    radius_estimate,
)
from connexion.series import bracket_sequence, ceil_binary, floor_sqrt_binary
from oracle import ASTAR_DIGITS

with mpmath.workdps(50):
    ASTAR = mpf(ASTAR_DIGITS)


@pytest.fixture(autouse=True)
def _working_precision():
    with mpmath.workdps(50):
        yield


def _frac(x: mpf) -> Fraction:
    man, exp = x.man_exp
    return Fraction(int(man)) * Fraction(2) ** int(exp)


# ---------------------------------------------------------------- eval_P


def test_P_at_zero():
    for N in (1, 3, 50):
        assert eval_P(0, compute_coeffs(N)).value == 0


def test_P_at_one_small_table():
    r = eval_P(1, compute_coeffs(3))
    assert r.exact == Fraction(-9, 40)
    assert r.value == mpf(-9) / 40


def test_P_slope_at_origin(table200):
    for h in (mpf("1e-3"), mpf("1e-5"), mpf("1e-7")):
        q = (eval_P(h, table200).value + h) / h**2
        assert abs(q - mpf(3) / 4) < 2 * h


def test_P_rejects_outside_unit_disc():
    with pytest.raises(ValueError):
        eval_P(Fraction(11, 10), compute_coeffs(5))
    with pytest.raises(ValueError):
        eval_P(-1.5, compute_coeffs(5))


@settings(max_examples=40, deadline=None)
@given(st.fractions(min_value=-1, max_value=1, max_denominator=10**6), st.integers(1, 80))
def test_P_rational_agrees_with_exact_sum(z, N):
    table = compute_coeffs(N)
    r = eval_P(z, table, dps=40)
    exact = sum(b * z**n for n, b in enumerate(table.coeffs, start=1))
    assert r.exact == exact
    with mpmath.workdps(40):
        assert abs(r.value - mpf(exact.numerator) / exact.denominator) <= mpf(10) ** -38


def test_P_float_argument_matches_rational(table200):
    a = eval_P(0.5, table200).value
    b = eval_P(Fraction(1, 2), table200).value
    assert abs(a - b) < mpf(10) ** -45


def test_tail_estimate():
    assert eval_P(1, compute_coeffs(10)).est_tail == mpmath.inf  # too short for a ratio window
    r = eval_P(Fraction(1, 2), compute_coeffs(100))
    assert 0 <= r.est_tail < mpf(10) ** -30


# ---------------------------------------------------------------- a* formulas


@pytest.mark.parametrize("N, expected", [(2, Fraction(1, 4)), (3, Fraction(9, 40)), (4, Fraction(67, 320))])
def test_series_examples(N, expected):
    r = astar_series(compute_coeffs(N))
    assert r.exact == expected


def test_series_is_decreasing_and_below_quarter(table1000):
    prev = None
    for N in range(2, 300):
        v = astar_series(table1000.truncated(N)).exact
        assert v <= Fraction(1, 4)
        if N >= 3:
            assert v < Fraction(1, 4)
        if prev is not None:
            assert v < prev
        prev = v


@pytest.mark.parametrize(
    "N, radicand",
    [(1, Fraction(-1, 2)), (2, Fraction(0)), (3, Fraction(1, 80))],
)
def test_sqrt_examples(N, radicand):
    r = astar_sqrt(compute_coeffs(N))
    assert r.radicand == radicand
    if radicand < 0:
        assert not r.in_domain
        assert mpmath.isnan(r.value)
    else:
        assert r.in_domain
        assert abs(r.value - mpmath.sqrt(mpf(radicand.numerator) / radicand.denominator)) < mpf(10) ** -45


def test_sqrt_increases(table1000):
    prev = mpf(0)
    for N in range(3, 200):
        v = astar_sqrt(table1000.truncated(N)).value
        assert v > prev
        prev = v


def test_formulas_converge_to_frozen_value(table1000):
    up = astar_series(table1000).value
    lo = astar_sqrt(table1000).value
    # the frozen digits are truncated, so compare within their last place
    assert lo < up
    assert abs(up - ASTAR) < mpf(10) ** -40 and abs(lo - ASTAR) < mpf(10) ** -40


def test_cross_formula_gap_shrinks(table1000):
    gaps = [astar_series(table1000.truncated(N)).value - astar_sqrt(table1000.truncated(N)).value
            for N in range(20, 1001, 20)]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


# ---------------------------------------------------------------- brackets


def test_bracket_examples():
    t = compute_coeffs(3)
    b = astar_bounds(t, 3, 2)
    assert b.upper == Fraction(1, 4) and b.lower_sq == Fraction(1, 80)
    assert abs(b.lower - mpf("0.1118034")) < mpf("1e-7")
    assert b.upper_real == mpf(1) / 4
    b = astar_bounds(t, 2, 1)
    assert b.lower == 0 and b.upper == 1
    b = astar_bounds(t, 3, 3)
    assert b.upper == Fraction(9, 40)


@pytest.mark.parametrize("n1, n2", [(1, 2), (0, 1), (2, 0), (4, 2), (2, 4)])
def test_bracket_preconditions(n1, n2):
    with pytest.raises(ValueError):
        astar_bounds(compute_coeffs(3), n1, n2)


def test_directed_rounding():
    bits = 30
    x = Fraction(1, 80)
    lo = floor_sqrt_binary(x, bits)
    assert _frac(lo) ** 2 <= x < (_frac(lo) + Fraction(1, 2**bits)) ** 2
    up = ceil_binary(Fraction(1, 3), bits)
    assert _frac(up) - Fraction(1, 2**bits) < Fraction(1, 3) <= _frac(up)
    assert _frac(ceil_binary(Fraction(-1, 3), bits)) > Fraction(-1, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 120), st.integers(1, 120))
def test_bracket_validity(n1, n2):
    t = compute_coeffs(120)
    b = astar_bounds(t, n1, n2)
    assert b.lower_sq >= 0
    assert b.lower_sq < b.upper**2
    assert b.lower < b.upper_real
    assert b.contains(ASTAR)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 100), st.integers(1, 100))
def test_bracket_monotone(n1, n2):
    t = compute_coeffs(101)
    here = astar_bounds(t, n1, n2)
    assert astar_bounds(t, n1, n2 + 1).upper < here.upper or n2 == 1
    assert astar_bounds(t, n1, n2 + 1).upper <= here.upper
    assert astar_bounds(t, n1 + 1, n2).lower_sq > here.lower_sq
    assert astar_bounds(t, n1 + 1, n2).lower >= here.lower


def test_sequence_matches_direct(table200):
    seq = bracket_sequence(table200, start=2)
    for N in (2, 3, 17, 64, 200):
        assert seq[N - 2] == astar_bounds(table200, N, N)


def test_width_reaches_target(table200):
    seq = bracket_sequence(table200, start=3)
    widths = [b.width for b in seq]
    assert all(b < a for a, b in zip(widths, widths[1:]))
    assert widths[-1] < mpf("1e-8")


# ---------------------------------------------------------------- radius


def test_radius_ratios():
    r = radius_estimate(compute_coeffs(30), window=5)
    assert r.ratio(3) == mpf(8) / 5
    assert abs(r.ratio(4) - mpf(50) / 33) < mpf(10) ** -45


def test_radius_exceeds_one(table1000):
    r = radius_estimate(table1000)
    assert 1 < r.estimate < 1.2
    assert r.window == 20


def test_radius_preconditions():
    with pytest.raises(ValueError):
        radius_estimate(compute_coeffs(22), window=20)
    with pytest.raises(ValueError):
        radius_estimate(compute_coeffs(30), window=0)


# ---------------------------------------------------------------- integral residual


def test_residual_at_zero():
    assert integral_residual(compute_coeffs(5), 0) == 0


def test_residual_decays_at_half():
    r3 = abs(integral_residual(compute_coeffs(3), Fraction(1, 2)))
    r5 = abs(integral_residual(compute_coeffs(5), Fraction(1, 2)))
    assert r5 < r3


def test_residual_exact_for_small_table():
    z = Fraction(1, 2)
    b = compute_coeffs(3).coeffs
    P = sum(c * z**n for n, c in enumerate(b, start=1))
    I = sum(c * z ** (n + 1) / (n + 1) for n, c in enumerate(b, start=1))
    exact = P**2 / 2 - I - z**2 + z**3 - z**4 / 4
    assert abs(integral_residual(compute_coeffs(3), z) - mpf(exact.numerator) / exact.denominator) < mpf(10) ** -45


def test_residual_at_one(table1000):
    rs = [abs(integral_residual(table1000.truncated(N), 1)) for N in (50, 200, 1000)]
    assert rs[0] > rs[1] > rs[2]
    assert rs[2] < mpf("1e-6")


@pytest.mark.parametrize("z", [Fraction(3, 4), Fraction(1)])
def test_residual_eventually_decreasing(table200, z):
    rs = [abs(integral_residual(table200.truncated(N), z)) for N in range(20, 201, 20)]
    assert all(b < a for a, b in zip(rs, rs[1:]))


def test_residual_domain():
    with pytest.raises(ValueError):
        integral_residual(compute_coeffs(5), Fraction(3, 2))


# ---------------------------------------------------------------- first-order slope


def test_slope_examples(table200):
    assert first_order_rhs(1, table200) == 0
    assert abs(first_order_rhs(0, table200) - astar_series(table200).value) < mpf(10) ** -45
    assert first_order_rhs(Fraction(1, 2), compute_coeffs(3)) == mpf("0.309375")


def test_slope_domain():
    with pytest.raises(ValueError):
        first_order_rhs(-0.5, compute_coeffs(5))


def test_slope_positive_below_one(table200):
    for y in (0.01, 0.3, 0.7, 0.99):
        assert first_order_rhs(y, table200) > 0


def test_astar_relation_to_P(table1000):
    # a*^2 = 1/2 + 2 int_0^1 P and a* = -P(1), so the two formulas share a limit
    assert math.isclose(float(-eval_P(1, table1000).value), float(ASTAR), rel_tol=1e-15)
