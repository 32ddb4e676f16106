"""The exit criteria as one orchestrated run.

Each check returns a ``Check`` record.  Suites group them so that a quick
subset can be run from the command line; ``all`` runs every check once.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath
from mpmath import mpf

from .cache import load_or_compute
from .exact import CoeffTable, compute_coeffs, verify_recursion
from .ode import compare_first_second, f_residual, integrate_second_order, shoot
from .picard import compare_with_series, complex_circle_check, make_config, run_picard
from .series import (
    astar_bounds,
    astar_series,
    astar_sqrt,
    bracket_sequence,
    integral_residual,
    radius_estimate,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: str
    bound: str
    note: str = ""
    seconds: float | None = field(default=None, compare=False)  # for runtime targets

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class VerifyReport:
    suite: str
    checks: list[Check] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def _s(x, digits: int = 6) -> str:
    return mpmath.nstr(mpf(x), digits)


class _Tables:
    """Coefficient tables shared by the checks, computed at most once."""

    def __init__(self, cache_path=None):
        self.cache_path = cache_path
        self._big: CoeffTable | None = None
        self.seconds: float | None = None

    def get(self, N: int) -> CoeffTable:
        if self._big is None or self._big.N < N:
            t0 = time.perf_counter()
            self._big = load_or_compute(max(N, 1000), self.cache_path)
            self.seconds = time.perf_counter() - t0
        return self._big.truncated(N)


EXPECTED_5 = [Fraction(-1), Fraction(3, 4), Fraction(1, 40), Fraction(1, 64), Fraction(33, 3200)]


def check_first_coefficients(tables: _Tables) -> Check:
    got = list(compute_coeffs(5).coeffs)
    return Check(
        "exact-coefficients", got == EXPECTED_5,
        ", ".join(str(x) for x in got), "[-1, 3/4, 1/40, 1/64, 33/3200]",
        "rational equality",
    )


def check_recursion_5000(tables: _Tables) -> Check:
    t0 = time.perf_counter()
    table = compute_coeffs(5000)
    ok_rec = verify_recursion(table)
    secs = time.perf_counter() - t0
    positive = all(c > 0 for c in table.numerators[1:])
    tables._big = table if tables._big is None or tables._big.N < 5000 else tables._big
    return Check(
        "positivity-and-recursion", ok_rec and positive and secs < 60,
        f"N=5000 recursion={'exact' if ok_rec else 'broken'} positive={positive}",
        "exact identity, b_n > 0, < 60 s",
        "runtime covers compute and verify",
        seconds=secs,
    )


def check_quarter_bound(tables: _Tables, N: int = 1000) -> Check:
    table = tables.get(N)
    D = table.denominator
    partial = 0
    worst = None
    ok = True
    for n, c in enumerate(table.numerators, start=1):
        partial += c
        if n >= 2:
            # -partial/D <= 1/4  <=>  -4 partial <= D
            lhs = -4 * partial
            ok &= lhs <= D if n == 2 else lhs < D
            if n == 2:
                worst = Fraction(-partial, D)
    return Check(
        "upper-bound-quarter", ok,
        f"series(2) = {worst}, strictly below 1/4 for 3 <= N <= {N}", "<= 1/4 (N=2), < 1/4 (N>=3)",
        "exact comparison",
    )


def check_bracket_convergence(tables: _Tables, target: float = 1e-8, cap: int = 10_000) -> Check:
    N = 400
    while True:
        seq = bracket_sequence(tables.get(N), start=3)
        hit = next((b for b in seq if b.width <= target), None)
        if hit is not None or N >= cap:
            break
        N = min(cap, 4 * N)
    seq = [b for b in seq if hit is None or b.n1 <= hit.n1]
    strict = all(
        b.upper < a.upper and b.lower_sq > a.lower_sq and b.width < a.width
        for a, b in zip(seq, seq[1:])
    )
    radius = radius_estimate(tables.get(1000)).estimate
    if hit is not None:
        ok = strict and radius > 1
        measured = f"width {_s(hit.width, 4)} at N={hit.n1}; radius estimate {_s(radius, 6)}"
        note = "width strictly decreasing from N=3"
    else:
        last = seq[-1]
        ok = strict and radius > 1 and last.width <= 1e-4
        measured = f"width {_s(last.width, 4)} at N={last.n1} (stalled); radius {_s(radius, 6)}"
        note = "degraded criterion: decay stalled before the target"
    return Check("bracket-convergence", ok, measured, f"width <= {target:g}, radius > 1", note)


def check_formula_consistency(tables: _Tables, Ns=(50, 200, 1000)) -> Check:
    ok = True
    parts = []
    for N in Ns:
        t = tables.get(N)
        gap = abs(astar_series(t).value - astar_sqrt(t).value)
        width = astar_bounds(t, N, N).width
        ok &= gap <= 10 * width
        parts.append(f"N={N}: {_s(gap, 3)} vs {_s(width, 3)}")
    return Check("formula-consistency", ok, "; ".join(parts), "|series - sqrt| <= 10 x width")


def check_oracle(tables: _Tables) -> Check:
    t0 = time.perf_counter()
    res = shoot(x_max=30.0, tol=1e-9, margin=0.02, rk_tol=1e-10)
    secs = time.perf_counter() - t0
    mid = mpf(res.midpoint)
    b200 = astar_bounds(tables.get(200), 200, 200)
    b1000 = astar_bounds(tables.get(1000), 1000, 1000)
    series = astar_series(tables.get(1000)).value
    gap = abs(mid - series)
    allowed = max(mpf("1e-6"), mpf(res.width), b200.width, b1000.width)
    inside = b200.contains(mid)
    ok = inside and gap <= allowed and secs < 30
    return Check(
        "oracle-equivalence", ok,
        f"midpoint {res.midpoint!r} {'inside' if inside else 'outside'} the N=200 bracket "
        f"(width {_s(b200.width, 3)}); |midpoint - series(1000)| = {_s(gap, 3)}",
        f"inside N=200 bracket, gap <= {_s(allowed, 3)}, < 30 s",
        "runtime covers the bisection",
        seconds=secs,
    )


def check_picard_bounds(tables: _Tables) -> Check:
    cfg = make_config(10, Fraction(1, 100), quad_nodes=32, grid_nodes=64)
    run = run_picard(cfg, 20)
    circle = complex_circle_check(cfg, 20)
    gamma = mpf(cfg.gamma.numerator) / cfg.gamma.denominator
    ok = run.max_bound_ratio <= 1 and circle.ok and run.max_ratio <= gamma + mpf("1e-12")
    return Check(
        "picard-bounds", ok,
        f"max |q_n - 1|/(M|z|) = {_s(max(run.max_bound_ratio, circle.max_bound_ratio), 4)}, "
        f"max step ratio = {_s(run.max_ratio, 8)}",
        "<= 1 on segment and circle; ratio <= 10/27 + 1e-12",
    )


def check_limit_representation(tables: _Tables) -> Check:
    cfg = make_config(10, Fraction(1, 100), quad_nodes=32, grid_nodes=64)
    q20 = run_picard(cfg, 20).iterates[-1]
    err = compare_with_series(q20, tables.get(200), dps=cfg.dps)
    return Check("limit-representation", err <= mpf("1e-8"), _s(err, 3), "<= 1e-8")


def check_integral_residual(tables: _Tables, Ns=(50, 200, 1000)) -> Check:
    res = [abs(integral_residual(tables.get(N), 1)) for N in Ns]
    ok = res[-1] <= mpf("1e-6") and all(b < a for a, b in zip(res, res[1:]))
    measured = ", ".join(f"N={N}: {_s(r, 3)}" for N, r in zip(Ns, res))
    return Check("integral-residual", ok, measured, "<= 1e-6 at N=1000, decreasing")


def check_first_second(tables: _Tables) -> Check:
    table = tables.get(1000)
    a = float(astar_series(table).value)
    agree = compare_first_second(table, a, x_span=10.0, level=0.5, tol=1e-10)
    return Check(
        "first-second-order", agree.sup_diff <= 1e-6,
        f"{agree.sup_diff:.3e} (worst at x={agree.x_worst:.2f})", "<= 1e-6 on [0, 10]",
        "second-order path launched with the series value of a*",
    )


def check_transform_residual(tables: _Tables) -> Check:
    res = shoot()
    traj = integrate_second_order(res.midpoint, 30.0, 1e-10, 0.02)
    coarse, fine = f_residual(traj, 0.1), f_residual(traj, 0.05)
    ratio = coarse / fine
    return Check(
        "transform-residual", 3.5 <= ratio <= 4.5,
        f"{coarse:.3e} -> {fine:.3e}, ratio {ratio:.4f}", "ratio in [3.5, 4.5]",
    )


CHECKS: dict[str, Callable[[_Tables], Check]] = {
    "exact-coefficients": check_first_coefficients,
    "positivity-and-recursion": check_recursion_5000,
    "upper-bound-quarter": check_quarter_bound,
    "bracket-convergence": check_bracket_convergence,
    "formula-consistency": check_formula_consistency,
    "oracle-equivalence": check_oracle,
    "picard-bounds": check_picard_bounds,
    "limit-representation": check_limit_representation,
    "integral-residual": check_integral_residual,
    "first-second-order": check_first_second,
    "transform-residual": check_transform_residual,
}

SUITES: dict[str, list[str]] = {
    "exact": ["exact-coefficients", "positivity-and-recursion", "upper-bound-quarter"],
    "series": ["bracket-convergence", "formula-consistency", "integral-residual"],
    "picard": ["picard-bounds", "limit-representation"],
    "cross": ["oracle-equivalence", "first-second-order", "transform-residual"],
}
SUITES["all"] = list(CHECKS)


def run_suite(suite: str = "all", cache_path=None, progress: Callable[[Check], None] | None = None) -> VerifyReport:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    tables = _Tables(cache_path)
    report = VerifyReport(suite)
    for name in SUITES[suite]:
        t0 = time.perf_counter()
        try:
            check = CHECKS[name](tables)
        except Exception as exc:  # a crashing check is a failing check
            check = Check(name, False, f"{type(exc).__name__}: {exc}", "-", "raised")
        report.timings[name] = time.perf_counter() - t0
        report.checks.append(check)
        if progress is not None:
            progress(check)
    return report
