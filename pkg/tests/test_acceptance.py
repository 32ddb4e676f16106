"""The eleven exit criteria, each at its stated tolerance.

Every test appends one line to the acceptance summary printed at the end of
the run, whatever the outcome.  Two criteria cannot be met as stated; they
are kept at full strength and marked as expected failures, with the reason
in the marker.
"""

import time
from fractions import Fraction

import mpmath
import pytest
from mpmath import mpf

from connexion import (
    astar_bounds,
    astar_series,
    astar_sqrt,
    compute_coeffs,
    integral_residual,
    radius_estimate,
    verify_recursion,
)
from connexion.ode import compare_first_second, f_residual, integrate_second_order, shoot
from connexion.picard import compare_with_series, complex_circle_check, make_config, run_picard
from connexion.series import bracket_sequence

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def table5000():
    t0 = time.perf_counter()
    table = compute_coeffs(5000)
    ok = verify_recursion(table)
    return table, ok, time.perf_counter() - t0


@pytest.fixture(scope="module")
def shot_result():
    t0 = time.perf_counter()
    res = shoot(x_max=30.0, tol=1e-9, margin=0.02, rk_tol=1e-10)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def picard_cfg():
    return make_config(10, Fraction(1, 100), quad_nodes=32, grid_nodes=64)


@pytest.fixture(scope="module")
def picard_run(picard_cfg):
    return run_picard(picard_cfg, 20)


class Record:
    def __init__(self, log, n):
        self.log, self.n, self.detail = log, n, "did not finish"
        self.passed = False

    def done(self, passed, detail):
        self.passed, self.detail = bool(passed), detail
        return self.passed


@pytest.fixture
def record(request, acceptance_log):
    n = int(request.node.name.split("_")[1])
    rec = Record(acceptance_log, n)
    yield rec
    acceptance_log.append(f"criterion {n}: {'PASS' if rec.passed else 'FAIL'}  {rec.detail}")


def _s(x, d=3):
    return mpmath.nstr(mpf(x), d)


def test_1_exact_coefficients(record):
    got = list(compute_coeffs(5).coeffs)
    want = [Fraction(-1), Fraction(3, 4), Fraction(1, 40), Fraction(1, 64), Fraction(33, 3200)]
    assert record.done(got == want, ", ".join(map(str, got)))


def test_2_positivity_and_recursion(record, table5000):
    table, ok, secs = table5000
    positive = all(c > 0 for c in table.numerators[1:])
    detail = f"N=5000 recursion {'exact' if ok else 'BROKEN'}, b_n > 0: {positive}, {secs:.1f} s (< 60 s)"
    assert record.done(ok and positive and secs < 60, detail)


def test_3_quarter_bound(record, table5000):
    table = table5000[0]
    D, partial, ok = table.denominator, 0, True
    for n, c in enumerate(table.numerators, start=1):
        partial += c
        if n == 2:
            ok &= Fraction(-partial, D) == Fraction(1, 4)
        elif n > 2:
            ok &= -4 * partial < D
    assert record.done(ok, "series(2) = 1/4, series(N) < 1/4 for 3 <= N <= 5000 (exact)")


def test_4_bracket_convergence(record, table5000):
    table = table5000[0]
    seq = bracket_sequence(table.truncated(1000), start=3)
    exact_strict = all(b.upper < a.upper and b.lower_sq > a.lower_sq for a, b in zip(seq, seq[1:]))
    rounded_strict = all(b.width < a.width for a, b in zip(seq, seq[1:]))
    # beyond N = 1000 both ends keep moving inward exactly when every b_n > 0
    tail_strict = all(c > 0 for c in table.numerators[1000:])
    hit = next(b for b in seq if b.width <= 1e-8)
    radius = radius_estimate(table.truncated(1000)).estimate
    early = (table[3] / table[4], table[4] / table[5])
    ok = exact_strict and rounded_strict and tail_strict and hit.width <= 1e-8 and radius > 1
    ok &= early == (Fraction(8, 5), Fraction(50, 33))
    detail = (f"width {_s(hit.width)} at N={hit.n1}, strictly decreasing to N=5000, "
              f"radius estimate {_s(radius, 5)}, b3/b4 = {early[0]}, b4/b5 = {early[1]}")
    assert record.done(ok, detail)


def test_5_formula_consistency(record, table5000):
    table = table5000[0]
    parts, ok = [], True
    for N in (50, 200, 1000):
        t = table.truncated(N)
        gap = abs(astar_series(t).value - astar_sqrt(t).value)
        width = astar_bounds(t, N, N).width
        ok &= gap <= 10 * width
        parts.append(f"N={N} gap/width {_s(gap / width, 4)}")
    assert record.done(ok, "; ".join(parts) + " (<= 10)")


@pytest.mark.xfail(
    strict=True,
    reason="a 1e-9 bisection bracket cannot place its midpoint inside the ~1e-11 wide N=200 bracket; "
    "the agreement half of the criterion passes",
)
def test_6_oracle_equivalence(record, table5000, shot_result):
    res, secs = shot_result
    mid = mpf(res.midpoint)
    b200 = astar_bounds(table5000[0].truncated(200), 200, 200)
    b1000 = astar_bounds(table5000[0].truncated(1000), 1000, 1000)
    gap = abs(mid - astar_series(table5000[0].truncated(1000)).value)
    allowed = max(mpf("1e-6"), b200.width, b1000.width)
    inside = b200.contains(mid)
    detail = (f"midpoint {res.midpoint!r} {'inside' if inside else 'outside'} N=200 bracket "
              f"[width {_s(b200.width)}, distance {_s(min(abs(mid - b200.lower), abs(mid - b200.upper_real)))}]; "
              f"|midpoint - series(1000)| = {_s(gap)} <= {_s(allowed)}; {secs:.1f} s")
    assert record.done(inside and gap <= allowed and secs < 30, detail)


def test_7_picard_bounds(record, picard_cfg, picard_run):
    circle = complex_circle_check(picard_cfg, 20)
    gamma = mpf(10) / 27
    real_ok = picard_run.max_bound_ratio <= 1 and all(v > 0 for q in picard_run.iterates for v in q.values)
    ratio = picard_run.max_ratio
    ok = real_ok and circle.ok and ratio <= gamma + mpf("1e-12")
    detail = (f"max |q_n - 1|/(10|z|) = {_s(picard_run.max_bound_ratio, 4)} (segment), "
              f"{_s(circle.max_bound_ratio, 4)} (circle, {circle.angles} rays); "
              f"max step ratio {_s(ratio, 6)} <= 10/27")
    assert record.done(ok, detail)


def test_8_limit_representation(record, picard_cfg, picard_run, table5000):
    err = compare_with_series(picard_run.iterates[-1], table5000[0].truncated(200), extra_points=64, dps=picard_cfg.dps)
    assert record.done(err <= mpf("1e-8"), f"sup |-z q_20 - P_200| = {_s(err)} (<= 1e-8)")


def test_9_integral_residual(record, table5000):
    res = [abs(integral_residual(table5000[0].truncated(N), 1)) for N in (50, 200, 1000)]
    ok = res[2] <= mpf("1e-6") and res[0] > res[1] > res[2]
    assert record.done(ok, "N=50/200/1000: " + ", ".join(_s(r) for r in res) + " (<= 1e-6, decreasing)")


@pytest.mark.xfail(
    strict=True,
    reason="the saddle at y = 1 grows second-order integration error like exp(2x); "
    "at tol 1e-10 the gap at x = 10 is ~6e-5",
)
def test_10_first_second_agreement(record, table5000):
    table = table5000[0].truncated(1000)
    a = float(astar_series(table).value)
    agree = compare_first_second(table, a, x_span=10.0, level=0.5, tol=1e-10)
    detail = f"sup |y_1st - y_2nd| on [0, 10] = {agree.sup_diff:.3e} at x = {agree.x_worst:.2f} (<= 1e-6)"
    assert record.done(agree.sup_diff <= 1e-6, detail)


def test_11_transform_residual(record, shot_result):
    res = shot_result[0]
    traj = integrate_second_order(res.midpoint, 30.0, 1e-10, 0.02)
    coarse, fine = f_residual(traj, 0.1), f_residual(traj, 0.05)
    ratio = coarse / fine
    assert record.done(3.5 <= ratio <= 4.5, f"h=0.1: {coarse:.3e}, h=0.05: {fine:.3e}, ratio {ratio:.4f}")
