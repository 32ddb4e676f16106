"""Fast exact evaluation of the coefficient recursion.

The recursion

    (n + 2) b_n = sum_{k=2}^{n-1} k b_k b_{n+1-k},      n >= 4,

is an online self-convolution: b_n needs every earlier coefficient.  Pairing
k with n + 1 - k turns the weighted sum into (n + 1)/2 times the plain
convolution, so with a_i = b_{i+2} we get

    a_m = (m + 3) / (2 (m + 4)) * S_{m-1},   S_t = sum_{i+j=t} a_i a_j.

Everything is carried as integers over a common denominator.  Mixing
fractions with unrelated denominators would cost one big gcd per term,
which is what makes the textbook rational recursion hopeless past N ~ 1000.

* ``denominator_multiple`` bounds the p-adic valuation of every denominator
  by a max-plus recursion over the tree of products the recursion builds.
  That gives a common multiple Lambda of den(b_1..b_N) up front.
* The convolution is evaluated online by divide and conquer: a finished left
  half contributes to the right half through one polynomial product.  FLINT
  multiplies those products by Kronecker substitution and FFT.
* The right factor of a product only involves small indices j < w.  It is
  carried over a much smaller denominator U (a rung of a ladder of units),
  and the partial sums are brought back to Lambda**2 by Horner's rule when
  a coefficient is finalized.

Every division is checked for exactness.  If the bound ever misses a prime
power, the run restarts with Lambda enlarged by the missing factor, so the
result never depends on the bound being sharp.
"""

from __future__ import annotations

import numpy as np
from flint import fmpz, fmpz_poly

# width of the first rung of the denominator ladder
FIRST_RUNG = 128


class _Inexact(ArithmeticError):
    def __init__(self, factor: int, index: int):
        super().__init__(f"common denominator is missing a {factor.bit_length()}-bit factor at a_{index}")
        self.factor = factor
        self.index = index


class _RungTooSmall(ArithmeticError):
    pass


def primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).tolist()


def _valuation(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def denominator_multiple(n_max: int) -> int:
    """A common multiple of the denominators of b_1, ..., b_{n_max}.

    For a prime p let e(n) bound v_p(den b_n).  From the recursion,

        e(n) = v_p(n + 2) + max_{2 <= k <= n-1} (e(k) + e(n + 1 - k)),

    seeded with the valuations of den b_2 = 4 and den b_3 = 40.  For the few
    primes with p**2 <= n_max + 5 the max-plus recursion is evaluated
    directly (vectorised over primes).  For the rest only first powers of p
    occur and the recursion has the closed form

        e(n) = floor((n + 2)/p) + max(0, floor((n + 5)/p) - 1).
    """
    if n_max < 2:
        return 1
    N = n_max
    lam = 1
    all_primes = primes_upto(N + 2)
    # the closed form ignores the seed denominators, which only involve p <= 5
    small = [p for p in all_primes if p * p <= N + 5 or p <= 5]
    if small and N >= 2:
        P = len(small)
        E = np.zeros((P, N + 1), dtype=np.int64)
        V = np.zeros((P, N + 1), dtype=np.int64)
        for i, p in enumerate(small):
            E[i, 2] = _valuation(4, p)
            if N >= 3:
                E[i, 3] = _valuation(40, p)
            q = p
            while q <= N + 2:
                V[i, q - 2 :: q] += 1
                q *= p
        for n in range(4, N + 1):
            h = (n + 1) // 2
            E[:, n] = V[:, n] + (E[:, 2 : h + 1] + E[:, n - 1 : n - h : -1]).max(axis=1)
        for p, e in zip(small, E.max(axis=1).tolist()):
            lam *= p**e
    for p in all_primes:
        if p * p > N + 5 and p > 5:
            lam *= p ** ((N + 2) // p + max(0, (N + 5) // p - 1))
    return lam


def _ladder(M: int) -> list[int]:
    widths = [FIRST_RUNG]
    while widths[-1] < M:
        widths.append(2 * widths[-1])
    return widths


def _run(N: int, extra: int, ladder: bool = True) -> tuple[fmpz, list[fmpz]]:
    M = N - 1  # a_0 .. a_{M-1} stand for b_2 .. b_N
    lam = fmpz(denominator_multiple(N) * extra)
    if ladder:
        widths = _ladder(M)
        units = [fmpz(denominator_multiple(min(w + 1, N)) * extra) for w in widths]
    else:
        widths, units = [max(M, 1)], [lam]
    cofactors = []
    for u in units:
        q, r = divmod(lam, u)
        if r:
            raise ArithmeticError("denominator bound is not monotone")
        cofactors.append(q)
    # Horner multipliers: unit_k -> unit_{k+1} -> ... -> lam
    steps = [units[k + 1] // units[k] for k in range(len(units) - 1)] + [cofactors[-1]]

    c = [fmpz(0)] * M  # a_i * lam
    Q = [fmpz(0)] * M  # pair sums in units lam**2
    R = [[fmpz(0)] * M for _ in units]  # pair sums in units lam * unit_k
    v: list[list[fmpz]] = [[] for _ in units]  # a_j * unit_k

    def scaled(k: int, w: int) -> list[fmpz]:
        vk, cof = v[k], cofactors[k]
        for j in range(len(vk), w):
            q, r = divmod(c[j], cof)
            if r:
                raise _RungTooSmall
            vk.append(q)
        return vk[:w]

    def finalize(m: int) -> None:
        if m <= 1:
            seed = 4 if m == 0 else 40
            if lam % seed:
                raise _Inexact(seed // int(lam.gcd(seed)), m)
            c[m] = lam * (3 if m == 0 else 1) // seed
            return
        t = m - 1
        acc = fmpz(0)
        for k in range(len(units)):
            acc = (acc + R[k][t]) * steps[k]
        num = (m + 3) * (acc + Q[t])
        den = 2 * (m + 4) * lam
        q, r = divmod(num, den)
        if r:
            raise _Inexact(int(den // den.gcd(num)), m)
        c[m] = q

    def solve(lo: int, hi: int) -> None:
        if hi - lo == 1:
            finalize(lo)
            return
        mid = (lo + hi + 1) // 2
        solve(lo, mid)
        top = min(hi, M)
        if lo == 0:
            p = fmpz_poly(c[:mid])
            prod = (p * p).coeffs()
            n = len(prod)
            for t in range(mid - 1, top - 1):
                if t < n:
                    Q[t] += prod[t]
        else:
            # j < width <= lo, so every a_j on the right is final already
            width = top - lo
            k = next(i for i, w in enumerate(widths) if w >= width)
            prod = (fmpz_poly(c[lo:mid]) * fmpz_poly(scaled(k, width))).coeffs()
            n = len(prod)
            Rk = R[k]
            for t in range(mid - 1, top - 1):
                if t - lo < n:
                    Rk[t] += 2 * prod[t - lo]
        solve(mid, hi)

    solve(0, M)
    return lam, c


def exact_numerators(N: int) -> tuple[int, list[int]]:
    """Return (denominator, [b_1 * denominator, ..., b_N * denominator]).

    The denominator is reduced so that it is the least common denominator of
    the whole table.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N == 1:
        return 1, [-1]
    extra, ladder = 1, True
    while True:
        try:
            lam, c = _run(N, extra, ladder)
            break
        except _Inexact as miss:
            # valuations grow roughly linearly in the index, so scale the
            # missing factor up to the end of the table in one restart
            extra *= miss.factor ** -(-(N + 1) // (miss.index + 2))
        except _RungTooSmall:
            ladder = False
    g = lam
    for x in reversed(c):
        if g == 1:
            break
        g = g.gcd(x)
    lam //= g
    return int(lam), [-int(lam)] + [int(x // g) for x in c]
