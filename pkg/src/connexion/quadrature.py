"""Gauss-Legendre rules and Chebyshev-Lobatto interpolation in mpmath."""

from __future__ import annotations

from functools import lru_cache

import mpmath
import numpy as np
from mpmath import mpf


def _legendre_and_derivative(n: int, x: mpf) -> tuple[mpf, mpf]:
    p0, p1 = mpf(1), x
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1)
    return p1, dp


@lru_cache(maxsize=None)
def gauss_legendre_01(n: int, dps: int) -> tuple[tuple[mpf, ...], tuple[mpf, ...]]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].

    Double-precision nodes from numpy are polished by Newton's method.
    """
    if n < 1:
        raise ValueError("need at least one node")
    x0, _ = np.polynomial.legendre.leggauss(n)
    nodes, weights = [], []
    with mpmath.workdps(dps + 10):
        tol = mpf(10) ** (-(dps + 5))
        for guess in x0:
            x = mpf(float(guess))
            for _ in range(100):
                p, dp = _legendre_and_derivative(n, x)
                dx = p / dp
                x -= dx
                if abs(dx) < tol:
                    break
            _, dp = _legendre_and_derivative(n, x)
            w = 2 / ((1 - x * x) * dp * dp)
            nodes.append((x + 1) / 2)
            weights.append(w / 2)
    return tuple(nodes), tuple(weights)


@lru_cache(maxsize=None)
def lobatto_points(n: int, dps: int) -> tuple[mpf, ...]:
    """n Chebyshev extreme points on [0, 1], increasing, starting at 0."""
    if n < 2:
        raise ValueError("need at least two points")
    with mpmath.workdps(dps + 10):
        pts = [(1 - mpmath.cospi(mpf(k) / (n - 1))) / 2 for k in range(n)]
        pts[0], pts[-1] = mpf(0), mpf(1)
    return tuple(pts)


def lobatto_weights(n: int) -> list[int | float]:
    """Barycentric weights for Chebyshev extreme points (up to a common factor)."""
    w: list[int | float] = [(-1) ** k for k in range(n)]
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def barycentric_row(x, points, weights) -> list:
    """Values of every Lagrange basis polynomial at x."""
    terms = []
    for k, (xk, wk) in enumerate(zip(points, weights)):
        d = x - xk
        if d == 0:
            return [mpf(1) if j == k else mpf(0) for j in range(len(points))]
        terms.append(wk / d)
    s = mpmath.fsum(terms)
    return [t / s for t in terms]


def barycentric_eval(x, points, weights, values):
    row = barycentric_row(x, points, weights)
    return mpmath.fdot(row, values)
