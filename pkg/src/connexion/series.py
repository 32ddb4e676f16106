"""Evaluating the series P(z) = sum b_n z**n and the formulas for a*.

a* = -P(1) and a*^2 = 1/2 + 2 * integral_0^1 P.  Since b_n > 0 for n >= 2,
truncations of the first give upper bounds and truncations of the second
(square-rooted) give lower bounds.  ``astar_bounds`` keeps both endpoints as
exact rationals and rounds them outward to binary numbers, so the bracket
stays rigorous through the square root.

Real evaluations run in mpmath at a configurable number of decimal digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import mpmath
from flint import fmpq, fmpz_poly
from mpmath import mpf

from .exact import CoeffTable

DEFAULT_DPS = 50
DEFAULT_WINDOW = 20


def _bits(dps: int) -> int:
    return int(math.ceil(dps * math.log2(10))) + 8


def coeffs_mpf(table: CoeffTable, dps: int = DEFAULT_DPS) -> list[mpf]:
    """b_1..b_N rounded to ``dps`` digits (memoised on the table)."""
    memo = table.__dict__.setdefault("_mpf_memo", {})
    if dps not in memo:
        with mpmath.workdps(dps + 10):
            D = mpf(table.denominator)
            memo[dps] = [mpf(c) / D for c in table.numerators]
    return memo[dps]


@dataclass(frozen=True)
class SeriesEval:
    """A truncated-series value.

    ``est_tail`` is a geometric estimate of the truncation error built from
    the trailing coefficient ratios.  It is not a proof: it is infinite when
    no ratio bound below 1 could be observed.  ``exact`` holds the rational
    value when the inputs were rational.  ``in_domain`` is False when a square
    root had a negative radicand; ``value`` is then NaN.
    """

    N: int
    value: mpf
    est_tail: mpf
    exact: Fraction | None = None
    radicand: Fraction | None = None
    in_domain: bool = True
    rigorous_tail: bool = field(default=False)


def _tail_ratio(table: CoeffTable, window: int = DEFAULT_WINDOW) -> mpf | None:
    """max b_{n+1}/b_n over the last ``window`` ratios, or None if too short."""
    N = table.N
    if N < window + 3:
        return None
    b = coeffs_mpf(table, 20)
    return max(b[n] / b[n - 1] for n in range(N - window, N))


def _geometric_tail(table: CoeffTable, absz, window: int = DEFAULT_WINDOW) -> mpf:
    ratio = _tail_ratio(table, window)
    if ratio is None:
        return mpmath.inf
    rho = ratio * absz
    if rho >= 1:
        return mpmath.inf
    last = abs(coeffs_mpf(table, 20)[-1]) * absz**table.N
    return last * rho / (1 - rho)


def _as_fraction(z) -> Fraction | None:
    if isinstance(z, Rational):
        return Fraction(z)
    return None


def eval_P(z, table: CoeffTable, dps: int = DEFAULT_DPS) -> SeriesEval:
    """Partial sum sum_{n<=N} b_n z**n for real |z| <= 1.

    Rational z (int or Fraction) also yields the exact partial sum.
    """
    exact = _as_fraction(z)
    with mpmath.workdps(dps):
        zz = mpf(exact.numerator) / exact.denominator if exact is not None else mpf(z)
        if abs(zz) > 1:
            raise ValueError(f"|z| = {mpmath.nstr(abs(zz), 8)} exceeds 1; only |z| <= 1 is supported")
        if exact is not None:
            poly = fmpz_poly([0] + list(table.numerators))
            q = poly(fmpq(exact.numerator, exact.denominator)) / table.denominator
            exact = Fraction(int(q.p), int(q.q))
        b = coeffs_mpf(table, dps)
        acc = mpf(0)
        for c in reversed(b):
            acc = (acc + c) * zz
        if exact is not None:
            acc = mpf(exact.numerator) / exact.denominator
        tail = _geometric_tail(table, abs(zz))
        return SeriesEval(table.N, +acc, tail, exact=exact)


def _sum_exact(table: CoeffTable) -> Fraction:
    return Fraction(sum(table.numerators), table.denominator)


def _radicand_exact(table: CoeffTable) -> Fraction:
    """1/2 + 2 sum_{n<=N} b_n/(n+1)."""
    N, D = table.N, table.denominator
    L = math.lcm(*range(2, N + 2))
    S = sum(c * (L // (n + 1)) for n, c in enumerate(table.numerators, start=1))
    return Fraction(D * L + 4 * S, 2 * D * L)


def astar_series(table: CoeffTable, dps: int = DEFAULT_DPS) -> SeriesEval:
    """-sum_{n<=N} b_n: an upper bound for a* once N >= 2."""
    exact = -_sum_exact(table)
    with mpmath.workdps(dps):
        value = mpf(exact.numerator) / exact.denominator
        return SeriesEval(table.N, value, _geometric_tail(table, mpf(1)), exact=exact)


def astar_sqrt(table: CoeffTable, dps: int = DEFAULT_DPS) -> SeriesEval:
    """sqrt(1/2 + 2 sum_{n<=N} b_n/(n+1)): a lower bound for a* once N >= 2.

    A negative radicand (N = 1) gives ``in_domain=False`` and a NaN value.
    """
    rad = _radicand_exact(table)
    with mpmath.workdps(dps):
        if rad < 0:
            return SeriesEval(table.N, mpmath.nan, mpmath.inf, radicand=rad, in_domain=False)
        value = mpmath.sqrt(mpf(rad.numerator) / rad.denominator)
        tail = _geometric_tail(table, mpf(1)) / (table.N + 2)
        if value > 0 and mpmath.isfinite(tail):
            tail = tail / value
        else:
            tail = mpmath.inf
        return SeriesEval(table.N, value, tail, radicand=rad)


def _binary(k: int, shift: int) -> mpf:
    with mpmath.workprec(max(k.bit_length(), 1) + 8):
        return mpf((k, -shift))


def floor_sqrt_binary(x: Fraction, bits: int) -> mpf:
    """Largest multiple of 2**-bits that is <= sqrt(x)."""
    if x < 0:
        raise ValueError("negative radicand")
    return _binary(math.isqrt((x.numerator << (2 * bits)) // x.denominator), bits)


def ceil_binary(x: Fraction, bits: int) -> mpf:
    """Smallest multiple of 2**-bits that is >= x."""
    return _binary(-((-x.numerator << bits) // x.denominator), bits)


@dataclass(frozen=True)
class AStarBracket:
    """lower <= a* <= upper_real, with exact rational data behind both ends.

    ``lower`` is sqrt(lower_sq) rounded down and ``upper_real`` is ``upper``
    rounded up, both to multiples of 2**-bits.
    """

    n1: int
    n2: int
    lower_sq: Fraction
    upper: Fraction
    lower: mpf
    upper_real: mpf
    bits: int

    @property
    def width(self) -> mpf:
        with mpmath.workprec(self.bits + 16):
            return self.upper_real - self.lower

    def contains(self, x) -> bool:
        return self.lower <= x <= self.upper_real


def astar_bounds(table: CoeffTable, n1: int, n2: int, dps: int = DEFAULT_DPS) -> AStarBracket:
    """Two-sided bracket from the sqrt truncation at n1 and the sum truncation at n2."""
    if n1 < 2:
        raise ValueError(f"n1 must be >= 2 (got {n1}): the lower bound needs at least b_1, b_2")
    if n2 < 1:
        raise ValueError(f"n2 must be >= 1 (got {n2})")
    if max(n1, n2) > table.N:
        raise ValueError(f"n1={n1}, n2={n2} exceed the table length {table.N}")
    lower_sq = _radicand_exact(table.truncated(n1))
    upper = -_sum_exact(table.truncated(n2))
    bits = _bits(dps)
    return AStarBracket(
        n1, n2, lower_sq, upper,
        floor_sqrt_binary(lower_sq, bits), ceil_binary(upper, bits), bits,
    )


def bracket_sequence(table: CoeffTable, start: int = 2, dps: int = DEFAULT_DPS) -> list[AStarBracket]:
    """Brackets with n1 = n2 = N for N = start..table.N, built incrementally."""
    if start < 2:
        raise ValueError("start must be >= 2")
    bits = _bits(dps)
    D = table.denominator
    c = table.numerators
    total = sum(c[: start - 1])
    L = math.lcm(*range(2, start + 1))
    S = sum(c[n - 1] * (L // (n + 1)) for n in range(1, start))
    out = []
    for N in range(start, table.N + 1):
        total += c[N - 1]
        L_new = math.lcm(L, N + 1)
        S = S * (L_new // L) + c[N - 1] * (L_new // (N + 1))
        L = L_new
        lower_sq = Fraction(D * L + 4 * S, 2 * D * L)
        upper = Fraction(-total, D)
        out.append(AStarBracket(N, N, lower_sq, upper,
                                floor_sqrt_binary(lower_sq, bits), ceil_binary(upper, bits), bits))
    return out


@dataclass(frozen=True)
class RadiusEstimate:
    """Empirical radius of convergence from coefficient ratios.

    ``ratios[i]`` is b_n / b_{n+1} for n = i + 2.
    """

    estimate: mpf
    window: int
    ratios: list[mpf]

    def ratio(self, n: int) -> mpf:
        return self.ratios[n - 2]


def radius_estimate(table: CoeffTable, window: int = DEFAULT_WINDOW, dps: int = DEFAULT_DPS) -> RadiusEstimate:
    """Average of the last ``window`` ratios b_n / b_{n+1}."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if table.N < window + 3:
        raise ValueError(f"need at least {window + 3} coefficients for window {window}, have {table.N}")
    b = coeffs_mpf(table, dps)
    with mpmath.workdps(dps):
        ratios = [b[n - 1] / b[n] for n in range(2, table.N)]
        est = mpmath.fsum(ratios[-window:]) / window
    return RadiusEstimate(est, window, ratios)


def integral_residual(table: CoeffTable, z, dps: int = DEFAULT_DPS) -> mpf:
    """1/2 P_N(z)^2 - integral_0^z P_N - z^2 + z^3 - z^4/4 for 0 <= z <= 1."""
    with mpmath.workdps(dps):
        zz = mpf(z) if not isinstance(z, Fraction) else mpf(z.numerator) / z.denominator
        if not 0 <= zz <= 1:
            raise ValueError("z must lie in [0, 1]")
        b = coeffs_mpf(table, dps)
        P = mpf(0)
        I = mpf(0)
        for n in range(table.N, 0, -1):
            P = (P + b[n - 1]) * zz
            I = (I + b[n - 1] / (n + 1)) * zz
        I *= zz
        return P**2 / 2 - I - zz**2 + zz**3 - zz**4 / 4


def first_order_rhs(y, table: CoeffTable, dps: int = DEFAULT_DPS) -> mpf:
    """-P_N(1 - y), the slope y' of the solution as a function of y."""
    with mpmath.workdps(dps):
        yy = mpf(y) if not isinstance(y, Fraction) else mpf(y.numerator) / y.denominator
        w = 1 - yy
        if not 0 <= w <= 1:
            raise ValueError("first_order_rhs needs 0 <= 1 - y <= 1")
        if isinstance(y, Rational):
            w = Fraction(1) - Fraction(y)
        return -eval_P(w, table, dps).value
