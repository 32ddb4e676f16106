"""Exact power-series coefficients of P(z) = sum b_n z**n.

P solves p p' - p = z (z - 1)(z - 2) with p(z) = -z + O(z**2).  Matching
powers of z gives b_1 = -1, b_2 = 3/4, b_3 = 1/40 and, for n >= 4,

    (n + 2) b_n = sum_{k=2}^{n-1} k b_k b_{n+1-k}.

A ``CoeffTable`` stores the coefficients as integers over one common
denominator.  Individual ``Fraction`` values are produced on demand and are
always in lowest terms.
"""

from __future__ import annotations

import re

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from flint import fmpz, fmpz_poly

from ._online import denominator_multiple, exact_numerators

BigRational = Fraction

_INT_RE = re.compile(r"[+-]?[0-9]+")


def int_str(x: int) -> str:
    """Base-10 string of an integer of any size."""
    return str(fmpz(x))


def str_int(s: str) -> int:
    """Parse a base-10 integer of any size."""
    s = s.strip()
    if not _INT_RE.fullmatch(s):
        raise ValueError(f"not a base-10 integer: {s[:40]!r}")
    return int(fmpz(s.lstrip("+")))


def fraction_str(x: Fraction) -> str:
    if x.denominator == 1:
        return int_str(x.numerator)
    return f"{int_str(x.numerator)}/{int_str(x.denominator)}"

B1, B2, B3 = Fraction(-1), Fraction(3, 4), Fraction(1, 40)


@dataclass(frozen=True, eq=True)
class CoeffTable:
    """b_1..b_N held as ``numerators[n - 1] / denominator``.

    Indexing is 1-based: ``table[n]`` is b_n.  ``denominator`` is the least
    common denominator of the entries, so two tables with the same values
    compare equal.
    """

    denominator: int
    numerators: tuple[int, ...]
    provenance: str = field(default="recursion", compare=False)

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        if not self.numerators:
            raise ValueError("a coefficient table cannot be empty")

    @property
    def N(self) -> int:
        return len(self.numerators)

    def __len__(self) -> int:
        return len(self.numerators)

    def __getitem__(self, n: int) -> Fraction:
        if not 1 <= n <= self.N:
            raise IndexError(f"b_{n} is outside 1..{self.N}")
        return Fraction(self.numerators[n - 1], self.denominator)

    @cached_property
    def coeffs(self) -> tuple[Fraction, ...]:
        """b_1..b_N in lowest terms."""
        d = self.denominator
        return tuple(Fraction(c, d) for c in self.numerators)

    def truncated(self, n: int) -> "CoeffTable":
        """The table b_1..b_n (denominator kept, so not reduced)."""
        if not 1 <= n <= self.N:
            raise ValueError(f"cannot truncate a table of length {self.N} to {n}")
        if n == self.N:
            return self
        return _reduced(self.denominator, list(self.numerators[:n]), self.provenance)

    def with_coeff(self, n: int, value: Fraction) -> "CoeffTable":
        """Copy with b_n replaced; the result is tagged as modified."""
        values = list(self.coeffs)
        values[n - 1] = Fraction(value)
        return CoeffTable.from_fractions(values, provenance="modified")

    @classmethod
    def from_fractions(cls, values: Iterable, provenance: str = "external") -> "CoeffTable":
        pairs = []
        for v in values:
            v = Fraction(v)
            pairs.append((v.numerator, v.denominator))
        return cls.from_pairs(pairs, provenance)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[int, int]], provenance: str = "external") -> "CoeffTable":
        """Build a table from (numerator, denominator) pairs for b_1, b_2, ...

        The pairs need not be in lowest terms.
        """
        if not pairs:
            raise ValueError("a coefficient table cannot be empty")
        if any(d <= 0 for _, d in pairs):
            raise ValueError("denominators must be positive")
        lam = fmpz(denominator_multiple(len(pairs)))
        dens = [fmpz(d) for _, d in pairs]
        if any(lam % d for d in dens):
            lam = fmpz(1)
            for d in dens:
                lam = lam.lcm(d)
        nums = [fmpz(n) * (lam // d) for (n, _), d in zip(pairs, dens)]
        return _reduced(lam, nums, provenance)

    def pairs(self) -> list[tuple[int, int]]:
        """(numerator, denominator) of each b_n in lowest terms."""
        D = fmpz(self.denominator)
        out = []
        for c in self.numerators:
            c = fmpz(c)
            g = c.gcd(D)
            out.append((int(c // g), int(D // g)))
        return out


def _reduced(den, nums, provenance: str) -> CoeffTable:
    den = fmpz(den)
    nums = [fmpz(x) for x in nums]
    g = den
    for x in reversed(nums):
        if g == 1:
            break
        g = g.gcd(x)
    if g > 1:
        den //= g
        nums = [x // g for x in nums]
    return CoeffTable(int(den), tuple(int(x) for x in nums), provenance)


def compute_coeffs(N: int) -> CoeffTable:
    """Exact b_1..b_N from the recursion."""
    if not isinstance(N, int) or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    den, nums = exact_numerators(N)
    return CoeffTable(den, tuple(nums))


def _convolution_poly(table: CoeffTable) -> tuple[fmpz_poly, fmpz_poly]:
    c = list(table.numerators)
    weighted = fmpz_poly([0, 0] + [k * c[k - 1] for k in range(2, table.N + 1)])
    plain = fmpz_poly([0, 0] + c[1:])
    return weighted, plain


def verify_recursion(table: CoeffTable) -> bool:
    """True iff the table has the right seeds, is positive and obeys the recursion.

    With b_n = c_n / D the recursion reads

        (n + 2) c_n D = sum_{k=2}^{n-1} k c_k c_{n+1-k},

    and the right side is coefficient n + 1 of (sum k c_k x**k)(sum c_j x**j)
    over k, j >= 2, so one truncated polynomial product checks every n.
    """
    D, c, N = table.denominator, table.numerators, table.N
    if D <= 0:
        return False
    if c[0] != -D:
        return False
    if N >= 2 and 4 * c[1] != 3 * D:
        return False
    if N >= 3 and 40 * c[2] != D:
        return False
    if any(x <= 0 for x in c[1:]):
        return False
    if N < 4:
        return True
    weighted, plain = _convolution_poly(table)
    rhs = weighted.mul_low(plain, N + 2)
    lhs = fmpz_poly([0] * 5 + [(n + 2) * c[n - 1] for n in range(4, N + 1)]) * D
    diff = (rhs - lhs).coeffs()
    return not any(diff[5:])


def series_ode_residual_coeffs(table: CoeffTable) -> list[Fraction]:
    """Coefficients of z**1..z**N in P_N P_N' - P_N - z (z - 1)(z - 2).

    All of them vanish for a correct table; the product also spills into
    degrees above N, which are not part of the truncation and are dropped.
    """
    D, c, N = table.denominator, table.numerators, table.N
    poly = fmpz_poly([0] + list(c))
    deriv = poly.derivative()
    cubic = fmpz_poly([0, 2, -3, 1])  # z (z - 1)(z - 2)
    D2 = D * D
    resid = poly.mul_low(deriv, N + 1) - poly * D - cubic * D2
    nums = resid.coeffs()
    nums += [0] * (N + 1 - len(nums))
    return [Fraction(int(x), D2) if x else Fraction(0) for x in nums[1 : N + 1]]
