"""Fixed-point iteration for q(z) = -P(z)/z near z = 0.

With p = -z q the first-order equation for P becomes

    q(z)^2 = 2 - 2z + z^2/2 - 2 * integral_0^1 t q(zt) dt,

and the iteration q_0 = 1, q_{n+1} = sqrt(right side evaluated at q_n)
converges on |z| <= eps.  For constants M, eps0 satisfying

    M eps0 < 2/3,
    (2 + eps0/2)(1 + M eps0) <= M,
    (1 + M eps0)(2M/3 + 2 + eps0/2) <= M,

every iterate obeys |q_n(z) - 1| <= M |z| and successive differences shrink
like M gamma**n |z| with gamma = 1 / (3 (1 - M eps)), eps = min(1/4, eps0).

Iterates are stored on Chebyshev points of a ray {omega * s : 0 <= s <= eps}
(omega = 1 is the real segment).  q(zt) for t in (0, 1) stays on the same ray,
so one real matrix, built from Gauss-Legendre nodes and barycentric
interpolation, turns node values of q_n into the integral for q_{n+1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath
from mpmath import mpf

from .exact import CoeffTable
from .quadrature import barycentric_eval, barycentric_row, gauss_legendre_01, lobatto_points, lobatto_weights
from .series import eval_P


class ConfigError(ValueError):
    pass


class PicardError(ArithmeticError):
    pass


def _exact(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class PicardConfig:
    M: Fraction
    eps0: Fraction
    eps: Fraction
    gamma: Fraction
    quad_nodes: int = 32
    grid_nodes: int = 64
    dps: int = 30


CONSTRAINTS = (
    ("M*eps0 < 2/3", lambda M, e: M * e < Fraction(2, 3)),
    ("(2 + eps0/2)(1 + M*eps0) <= M", lambda M, e: (2 + e / 2) * (1 + M * e) <= M),
    ("(1 + M*eps0)(2M/3 + 2 + eps0/2) <= M", lambda M, e: (1 + M * e) * (2 * M / 3 + 2 + e / 2) <= M),
)


def make_config(M=10, eps0=Fraction(1, 100), quad_nodes: int = 32, grid_nodes: int = 64, dps: int = 30) -> PicardConfig:
    """Validate the constants and derive eps and gamma exactly.

    Floats are read through their shortest decimal repr, so 0.01 means 1/100.
    """
    M, eps0 = _exact(M), _exact(eps0)
    if M <= 0:
        raise ConfigError(f"M must be positive, got {M}")
    if eps0 <= 0:
        raise ConfigError(f"eps0 must be positive, got {eps0}")
    if quad_nodes < 1 or grid_nodes < 2:
        raise ConfigError("need quad_nodes >= 1 and grid_nodes >= 2")
    for name, holds in CONSTRAINTS:
        if not holds(M, eps0):
            raise ConfigError(f"constraint violated: {name} (M={M}, eps0={eps0})")
    eps = min(Fraction(1, 4), eps0)
    gamma = 1 / (3 * (1 - M * eps))
    if gamma >= 1:
        raise ConfigError(f"contraction factor {gamma} is not below 1")
    return PicardConfig(M, eps0, eps, gamma, quad_nodes, grid_nodes, dps)


def _mp(x: Fraction) -> mpf:
    return mpf(x.numerator) / x.denominator


@dataclass(frozen=True)
class GridFunction:
    """Values of an iterate at Chebyshev points along the ray omega * [0, eps].

    ``s`` are the real ray parameters, ``nodes`` = omega * s the actual points.
    """

    s: tuple
    values: tuple
    iteration_index: int
    omega: object = 1

    @property
    def nodes(self) -> tuple:
        if self.omega == 1:
            return self.s
        return tuple(self.omega * x for x in self.s)

    def __call__(self, s):
        """Interpolated value at ray parameter s in [0, eps]."""
        scale = self.s[-1]
        pts = [x / scale for x in self.s]
        return barycentric_eval(s / scale, pts, lobatto_weights(len(pts)), self.values)

    def bound_ratio(self, M) -> mpf:
        """max over nonzero nodes of |q - 1| / (M |z|); <= 1 means the bound holds."""
        M = _mp(_exact(M))
        return max(abs(v - 1) / (M * abs(z)) for z, v in zip(self.nodes, self.values) if z != 0)


@lru_cache(maxsize=None)
def kernel(grid_nodes: int, quad_nodes: int, dps: int) -> tuple[tuple[mpf, ...], ...]:
    """K[i][k] = sum_j w_j t_j l_k(s_i t_j) on the reference interval [0, 1].

    Interpolation is scale invariant, so K serves every eps and every ray.
    """
    s = lobatto_points(grid_nodes, dps)
    bw = lobatto_weights(grid_nodes)
    t, w = gauss_legendre_01(quad_nodes, dps)
    rows = []
    with mpmath.workdps(dps + 10):
        for si in s:
            acc = [mpf(0)] * grid_nodes
            for tj, wj in zip(t, w):
                row = barycentric_row(si * tj, s, bw)
                f = wj * tj
                acc = [a + f * r for a, r in zip(acc, row)]
            rows.append(tuple(acc))
    return tuple(rows)


def initial(cfg: PicardConfig, omega=1) -> GridFunction:
    with mpmath.workdps(cfg.dps):
        eps = _mp(cfg.eps)
        s = tuple(eps * x for x in lobatto_points(cfg.grid_nodes, cfg.dps))
        return GridFunction(s, tuple(mpf(1) for _ in s), 0, omega)


def _integrals(q: GridFunction, quad_nodes: int, dps: int) -> list:
    K = kernel(len(q.s), quad_nodes, dps)
    return [mpmath.fdot(row, q.values) for row in K]


def picard_step(q: GridFunction, cfg: PicardConfig) -> GridFunction:
    """q_{n+1} = principal sqrt(2 - 2z + z^2/2 - 2 integral_0^1 t q_n(zt) dt)."""
    with mpmath.workdps(cfg.dps):
        ints = _integrals(q, cfg.quad_nodes, cfg.dps)
        out = []
        for z, I in zip(q.nodes, ints):
            rad = 2 - 2 * z + z * z / 2 - 2 * I
            if isinstance(rad, mpmath.mpc):
                if rad.real <= 0:
                    raise PicardError(f"radicand {mpmath.nstr(rad, 8)} at z={mpmath.nstr(z, 8)} leaves the right half-plane")
            elif rad <= 0:
                raise PicardError(f"radicand {mpmath.nstr(rad, 8)} <= 0 at z={mpmath.nstr(z, 8)}")
            out.append(mpmath.sqrt(rad))
        return GridFunction(q.s, tuple(out), q.iteration_index + 1, q.omega)


def fixed_point_residual(q: GridFunction, cfg: PicardConfig) -> mpf:
    """max over nodes of |q^2 + 2 integral_0^1 t q(zt) dt - 2 + 2z - z^2/2|."""
    with mpmath.workdps(cfg.dps):
        ints = _integrals(q, cfg.quad_nodes, cfg.dps)
        return max(abs(v * v + 2 * I - 2 + 2 * z - z * z / 2) for z, v, I in zip(q.nodes, q.values, ints))


def quadrature_error_estimate(q: GridFunction, cfg: PicardConfig) -> mpf:
    """Change of the integrals when the rule is halved, floored at working precision.

    This overestimates the error of the full rule because Gauss-Legendre
    converges geometrically for these analytic integrands.
    """
    with mpmath.workdps(cfg.dps):
        full = _integrals(q, cfg.quad_nodes, cfg.dps)
        half = _integrals(q, max(1, cfg.quad_nodes // 2), cfg.dps)
        diff = max(abs(a - b) for a, b in zip(full, half))
        return max(diff, mpf(10) ** (3 - cfg.dps))


@dataclass(frozen=True)
class StepReport:
    n: int
    sup_diff: mpf  # sup |q_{n+1} - q_n|
    sup_diff_over_z: mpf  # sup |q_{n+1} - q_n| / |z|
    bound: mpf  # M gamma^n
    ratio: mpf | None  # sup_diff / previous sup_diff
    within_bound: bool
    within_gamma: bool | None


@dataclass(frozen=True)
class PicardRun:
    config: PicardConfig
    iterates: list[GridFunction]  # q_1 .. q_k
    steps: list[StepReport] = field(default_factory=list)
    ratio_slack: mpf = mpf("1e-12")

    @property
    def max_bound_ratio(self) -> mpf:
        """Worst |q_n - 1| / (M|z|) over all iterates and nodes."""
        return max(q.bound_ratio(self.config.M) for q in self.iterates)

    @property
    def max_ratio(self) -> mpf:
        return max(s.ratio for s in self.steps if s.ratio is not None)

    @property
    def ok(self) -> bool:
        return (
            self.max_bound_ratio <= 1
            and all(s.within_bound for s in self.steps)
            and all(s.within_gamma is not False for s in self.steps)
        )


def run_picard(cfg: PicardConfig, k: int, omega=1, ratio_slack=mpf("1e-12")) -> PicardRun:
    """Iterate k times from q_0 = 1 and record the contraction of each step."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = initial(cfg, omega)
    iterates, steps = [], []
    M, gamma = _mp(cfg.M), _mp(cfg.gamma)
    prev = None
    with mpmath.workdps(cfg.dps):
        for n in range(k):
            nxt = picard_step(q, cfg)
            diffs = [abs(a - b) for a, b in zip(nxt.values, q.values)]
            sup = max(diffs)
            sup_z = max(d / abs(z) for d, z in zip(diffs, q.nodes) if z != 0)
            bound = M * gamma**n
            ratio = sup / prev if prev else None
            steps.append(StepReport(
                n, sup, sup_z, bound, ratio,
                sup_z <= bound,
                None if ratio is None else ratio <= gamma + ratio_slack,
            ))
            prev = sup
            iterates.append(nxt)
            q = nxt
    return PicardRun(cfg, iterates, steps, ratio_slack)


def compare_with_series(q: GridFunction, table: CoeffTable, extra_points: int = 0, dps: int | None = None) -> mpf:
    """sup |-z q(z) - P_N(z)| over the nodes (and optional extra interior points)."""
    if q.omega != 1:
        raise ValueError("series comparison is only defined on the real segment")
    dps = dps or mpmath.mp.dps
    with mpmath.workdps(dps):
        pts = list(zip(q.s, q.values))
        if extra_points:
            eps = q.s[-1]
            for j in range(1, extra_points + 1):
                x = eps * mpf(j) / (extra_points + 1)
                pts.append((x, q(x)))
        return max(abs(-z * v - eval_P(z, table, dps).value) for z, v in pts)


@dataclass(frozen=True)
class CircleReport:
    ok: bool
    angles: int
    iterations: int
    max_bound_ratio: mpf  # worst |q_n(z) - 1| / (M |z|) over rays, nodes, n
    circle_values: list  # q_k at omega * eps for each angle
    real_mismatch: mpf  # |q_k(eps) on the theta = 0 ray - real-segment q_k(eps)|


def complex_circle_check(cfg: PicardConfig, k: int, angles: int = 12) -> CircleReport:
    """Run the iteration along rays to the points of |z| = eps.

    The bound |q_n - 1| <= M |z| is checked at every node of every ray, which
    includes the circle point at its end.
    """
    if angles < 1:
        raise ValueError("need at least one angle")
    worst = mpf(0)
    circle = []
    with mpmath.workdps(cfg.dps):
        for j in range(angles):
            omega = mpmath.expjpi(mpf(2 * j) / angles) if j else mpmath.mpc(1)
            run = run_picard(cfg, k, omega)
            worst = max(worst, run.max_bound_ratio)
            circle.append(run.iterates[-1].values[-1])
        real = run_picard(cfg, k).iterates[-1].values[-1]
        mismatch = abs(circle[0] - real)
    return CircleReport(worst <= 1, angles, k, worst, circle, mismatch)
