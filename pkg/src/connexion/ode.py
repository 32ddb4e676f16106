"""Shooting oracle for y'' - y' + y = y^3, y(0) = 0, y(inf) = 1.

An explicit Dormand-Prince 5(4) integrator with PI step control drives the
initial value problem (y, y')(0) = (0, a).  Shots are classified as
overshooting (y climbs past 1), undershooting (y turns back below 1) or
converged, and bisection on a narrows in on the unique connecting slope.

The solution approaches 1 along the stable direction of the saddle at
y = 1 (eigenvalues 2 and -1), so any error in a grows like exp(2x) and
every shot eventually leaves the band around 1.  That is what makes the
classifier a reliable sign oracle.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exact import CoeffTable
from .series import coeffs_mpf

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (  # fifth-order minus embedded fourth-order weights
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


class IntegrationError(ArithmeticError):
    pass


class ShootingError(RuntimeError):
    pass


class AmbiguousShot(ShootingError):
    pass


@dataclass
class Trajectory:
    """Accepted integrator steps with dense output.

    ``ypp`` holds the second derivative at each sample.  For the
    first-order equation ``ypp`` is d/dx of the slope.  ``at`` interpolates
    y with quintic Hermite (y, y', y'') and y' with cubic Hermite (y', y'').
    """

    x: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    ypp: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.x)

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist(), self.yp.tolist()))

    def at(self, xs) -> tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=float)
        if xs.size and (xs.min() < self.x[0] - 1e-12 or xs.max() > self.x[-1] + 1e-12):
            raise ValueError("interpolation outside the trajectory")
        i = np.clip(np.searchsorted(self.x, xs, side="right") - 1, 0, len(self.x) - 2)
        x0, x1 = self.x[i], self.x[i + 1]
        h = x1 - x0
        s = (xs - x0) / h
        y0, y1 = self.y[i], self.y[i + 1]
        d0, d1 = self.yp[i] * h, self.yp[i + 1] * h
        c0, c1 = self.ypp[i] * h * h, self.ypp[i + 1] * h * h
        s2, s3 = s * s, s * s * s
        s4, s5 = s3 * s, s3 * s2
        h00 = 1 - 10 * s3 + 15 * s4 - 6 * s5
        h01 = 10 * s3 - 15 * s4 + 6 * s5
        h10 = s - 6 * s3 + 8 * s4 - 3 * s5
        h11 = -4 * s3 + 7 * s4 - 3 * s5
        h20 = (s2 - 3 * s3 + 3 * s4 - s5) / 2
        h21 = (s3 - 2 * s4 + s5) / 2
        y = h00 * y0 + h01 * y1 + h10 * d0 + h11 * d1 + h20 * c0 + h21 * c1
        g00 = 2 * s3 - 3 * s2 + 1
        g10 = s3 - 2 * s2 + s
        g01 = -2 * s3 + 3 * s2
        g11 = s3 - s2
        yp = g00 * self.yp[i] + g01 * self.yp[i + 1] + (g10 * self.ypp[i] + g11 * self.ypp[i + 1]) * h
        return y, yp

    def resample(self, h: float, x_start: float | None = None, x_stop: float | None = None) -> "Trajectory":
        """Uniform grid x_start, x_start + h, ... (<= x_stop) via dense output."""
        lo = self.x[0] if x_start is None else x_start
        hi = self.x[-1] if x_stop is None else x_stop
        n = int(math.floor((hi - lo) / h + 1e-9))
        xs = lo + h * np.arange(n + 1)
        y, yp = self.at(xs)
        ypp = _second_derivative(y, yp) if self.meta.get("order", 2) == 2 else np.gradient(yp, xs)
        return Trajectory(xs, y, yp, ypp, dict(self.meta, resampled=h))


def _second_derivative(y, yp):
    return yp - y + y**3


def _rhs2(x, u):
    y, yp = u
    return (yp, yp - y + y * y * y)


class _Stepper:
    """Dormand-Prince 5(4) on a small tuple state, scalar floats only."""

    def __init__(self, f: Callable, tol: float, max_step: float):
        self.f = f
        self.tol = tol
        self.max_step = max_step
        self.accepted = 0
        self.rejected = 0

    def _norm(self, u, unew, err):
        tol = self.tol
        tot = 0.0
        for a, b, e in zip(u, unew, err):
            sc = tol + tol * max(abs(a), abs(b))
            tot += (e / sc) ** 2
        return math.sqrt(tot / len(u))

    def run(self, x0, u0, x_end, stop=None, direction=1.0):
        f = self.f
        n = len(u0)
        xs, us, fs = [x0], [tuple(u0)], [f(x0, u0)]
        x, u, k1 = x0, tuple(u0), fs[0]
        span = abs(x_end - x0)
        h = min(self.max_step, 0.01 * max(span, 1e-3)) * direction
        err_prev = 1e-4
        reason = "x_max"
        while (x_end - x) * direction > 1e-14 * max(1.0, abs(x_end)):
            if abs(h) < 1e-13 * max(1.0, abs(x)):
                raise IntegrationError(f"step size underflow at x={x:.6g}, y={u[0]:.6g}")
            if (x + h - x_end) * direction > 0:
                h = x_end - x
            ks = [k1]
            for s in range(1, 7):
                a = _A[s]
                ui = tuple(u[j] + h * sum(a[m] * ks[m][j] for m in range(s)) for j in range(n))
                ks.append(f(x + _C[s] * h, ui))
            unew = ui  # the last stage is evaluated at the 5th-order solution
            err = tuple(h * sum(_E[m] * ks[m][j] for m in range(7)) for j in range(n))
            if not all(map(math.isfinite, unew)) or not all(map(math.isfinite, err)):
                self.rejected += 1
                h *= 0.25
                continue
            e = self._norm(u, unew, err)
            if e <= 1.0:
                # FSAL: the last stage is f at the new point
                x = x + h
                u = unew
                k1 = ks[6]
                xs.append(x)
                us.append(u)
                fs.append(k1)
                self.accepted += 1
                fac = 0.9 * max(e, 1e-10) ** -0.14 * err_prev**0.08
                err_prev = max(e, 1e-4)
                h = direction * min(abs(h) * min(5.0, max(0.2, fac)), self.max_step)
                if stop is not None and stop(u):
                    reason = "event"
                    break
            else:
                self.rejected += 1
                h *= max(0.2, 0.9 * e**-0.2)
        return xs, us, fs, reason


def integrate_second_order(
    a: float,
    x_max: float = 30.0,
    tol: float = 1e-10,
    margin: float | None = 0.02,
    max_step: float = 0.1,
) -> Trajectory:
    """Solve y'' = y' - y + y^3 from (y, y')(0) = (0, a) up to x_max.

    With ``margin`` set, integration stops at the first sample that is an
    overshoot or undershoot event (see ``classify``); the crossing is then
    located on the dense output and becomes the last sample.
    ``max_step`` caps the gap between consecutive samples.
    """
    if x_max <= 0 or tol <= 0:
        raise ValueError("need x_max > 0 and tol > 0")
    stop = None
    if margin is not None:
        stop = lambda u: _event(u[0], u[1], margin) is not None  # noqa: E731
    st = _Stepper(_rhs2, tol, max_step)
    xs, us, fs, reason = st.run(0.0, (0.0, float(a)), float(x_max), stop)
    x = np.array(xs)
    y = np.array([u[0] for u in us])
    yp = np.array([u[1] for u in us])
    ypp = np.array([k[1] for k in fs])
    traj = Trajectory(x, y, yp, ypp, {
        "a": float(a), "x_max": float(x_max), "tol": tol, "margin": margin, "order": 2,
        "accepted": st.accepted, "rejected": st.rejected, "stop": reason, "max_step": max_step,
    })
    if reason == "event":
        _locate_event(traj, margin)
    return traj


def _event(y: float, yp: float, margin: float) -> str | None:
    if y > 1 + margin:
        return "overshoot"
    if yp < 0 and y < 1 - margin:
        return "undershoot"
    return None


def _locate_event(traj: Trajectory, margin: float) -> None:
    """Move the last sample back to where the event condition first holds."""
    x0, x1 = traj.x[-2], traj.x[-1]
    lo, hi = x0, x1
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        y, yp = traj.at([mid])
        if _event(float(y[0]), float(yp[0]), margin) is None:
            lo = mid
        else:
            hi = mid
    if hi < x1:
        y, yp = traj.at([hi])
        traj.x[-1], traj.y[-1], traj.yp[-1] = hi, y[0], yp[0]
        traj.ypp[-1] = _second_derivative(y[0], yp[0])
    traj.meta["x_event"] = float(traj.x[-1])


class Outcome(enum.Enum):
    OVERSHOOT = "Overshoot"
    UNDERSHOOT = "Undershoot"
    CONVERGED = "Converged"


@dataclass(frozen=True)
class ShotOutcome:
    kind: Outcome
    x_event: float
    y_event: float


def classify(traj: Trajectory, margin: float = 0.02) -> ShotOutcome:
    """Overshoot if y > 1 + margin anywhere; undershoot if y' < 0 while
    y < 1 - margin; converged if the run reaches its x_max inside the band
    |y - 1| <= margin with |y'| <= margin.  Whichever event comes first wins.
    """
    if not 0 < margin < 0.5:
        raise ValueError("margin must lie in (0, 0.5)")
    over = np.flatnonzero(traj.y > 1 + margin)
    under = np.flatnonzero((traj.yp < 0) & (traj.y < 1 - margin))
    first = [(i, Outcome.OVERSHOOT) for i in over[:1]] + [(i, Outcome.UNDERSHOOT) for i in under[:1]]
    if first:
        i, kind = min(first, key=lambda p: p[0])
        return ShotOutcome(kind, float(traj.x[i]), float(traj.y[i]))
    x_max = traj.meta.get("x_max", traj.x[-1])
    y, yp = traj.y[-1], traj.yp[-1]
    if traj.x[-1] >= x_max - 1e-9 and abs(y - 1) <= margin and abs(yp) <= margin:
        return ShotOutcome(Outcome.CONVERGED, float(traj.x[-1]), float(y))
    raise AmbiguousShot(
        f"no classification by x={traj.x[-1]:.4g} (y={y:.6g}, y'={yp:.3g}); increase x_max"
    )


def shot(a: float, x_max: float = 30.0, tol: float = 1e-10, margin: float = 0.02) -> ShotOutcome:
    return classify(integrate_second_order(a, x_max, tol, margin), margin)


@dataclass(frozen=True)
class ShootResult:
    a_lo: float
    a_hi: float
    iterations: int
    widths: list[float]
    x_max: float
    tol: float
    rk_tol: float
    margin: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a_lo + self.a_hi)

    @property
    def width(self) -> float:
        return self.a_hi - self.a_lo

    def __iter__(self):
        return iter((self.a_lo, self.a_hi))


def shoot(
    x_max: float = 30.0,
    tol: float = 1e-9,
    margin: float = 0.02,
    rk_tol: float = 1e-10,
    lo: float = 0.01,
    hi: float = 1.0,
    max_iter: int = 200,
) -> ShootResult:
    """Bisection on the initial slope until the bracket is at most ``tol`` wide.

    The seed bracket must classify as (undershoot, overshoot).
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    for a, want in ((lo, Outcome.UNDERSHOOT), (hi, Outcome.OVERSHOOT)):
        try:
            got = shot(a, x_max, rk_tol, margin).kind
        except AmbiguousShot as exc:
            raise ShootingError(f"seed a={a} is ambiguous: {exc}") from None
        if got is not want:
            raise ShootingError(f"seed a={a} classifies as {got.value}, expected {want.value}")
    widths = [hi - lo]
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break  # bracket at floating-point resolution
        kind = _classify_extending(mid, x_max, rk_tol, margin)
        if kind is Outcome.UNDERSHOOT:
            lo = mid
        else:
            hi = mid
        it += 1
        widths.append(hi - lo)
    return ShootResult(lo, hi, it, widths, x_max, tol, rk_tol, margin)


def _classify_extending(a, x_max, rk_tol, margin) -> Outcome:
    """Classify, doubling x_max while the shot stays inside the band."""
    for _ in range(4):
        try:
            kind = shot(a, x_max, rk_tol, margin).kind
        except AmbiguousShot:
            kind = Outcome.CONVERGED
        if kind is not Outcome.CONVERGED:
            return kind
        x_max *= 2
    raise ShootingError(f"a={a!r} never leaves the band around 1; the integrator cannot resolve it")


def _float_coeffs(table: CoeffTable) -> np.ndarray:
    return np.array([0.0] + [float(c) for c in coeffs_mpf(table, 20)])


def integrate_first_order(
    table: CoeffTable,
    y0: float,
    x_max: float,
    tol: float = 1e-10,
    max_step: float = 0.1,
) -> Trajectory:
    """Solve y' = -P_N(1 - y) from y(0) = y0 over [0, x_max].

    A negative x_max integrates backwards.  ``yp`` holds the slope and
    ``ypp`` its derivative along the solution.
    """
    if not 0 < y0 < 1:
        raise ValueError("y0 must lie in (0, 1)")
    b = _float_coeffs(table)
    db = np.polynomial.polynomial.polyder(b)
    P = np.polynomial.polynomial.polyval

    def slope(y):
        return -P(1.0 - y, b)

    def rhs(x, u):
        return (float(slope(u[0])),)

    direction = 1.0 if x_max >= 0 else -1.0
    st = _Stepper(rhs, tol, max_step)
    # leaving [0, 1] would take 1 - y outside the disc where the series is used
    stop = lambda u: not 0.0 <= u[0] <= 1.0  # noqa: E731
    xs, us, fs, reason = st.run(0.0, (float(y0),), float(x_max), stop, direction)
    if direction < 0:
        xs, us, fs = xs[::-1], us[::-1], fs[::-1]
    x = np.array(xs)
    y = np.array([u[0] for u in us])
    yp = np.array([k[0] for k in fs])
    ypp = P(1.0 - y, db) * yp  # d/dx of -P(1 - y)
    return Trajectory(x, y, yp, ypp, {
        "y0": float(y0), "x_max": float(x_max), "tol": tol, "order": 1, "N": table.N,
        "accepted": st.accepted, "rejected": st.rejected, "stop": reason, "max_step": max_step,
    })


def crossing(traj: Trajectory, level: float) -> float:
    """First x where y reaches ``level`` (dense output, bisection)."""
    idx = np.flatnonzero(traj.y >= level) if traj.y[0] < level else np.flatnonzero(traj.y <= level)
    if idx.size == 0 or idx[0] == 0:
        raise ValueError(f"trajectory does not cross y={level}")
    lo, hi = traj.x[idx[0] - 1], traj.x[idx[0]]
    up = traj.y[0] < level
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        y = float(traj.at([mid])[0][0])
        if (y < level) == up:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def f_residual(traj: Trajectory, h: float = 0.1, x_start: float | None = None, x_stop: float | None = None) -> float:
    """max |r^2 f'' + f - f^3| with r = e^x, f(r) = y(x).

    y is sampled on a uniform x-grid of spacing h, i.e. a geometric r-grid,
    and f'' comes from the three-point divided difference on that grid,
    which is second-order accurate because the spacing varies smoothly.
    """
    lo = traj.x[0] if x_start is None else x_start
    hi = traj.x[-1] if x_stop is None else x_stop
    if hi - lo < 1:
        raise ValueError("need a trajectory covering at least unit length in x")
    g = traj.resample(h, lo, hi)
    if len(g) < 3:
        raise ValueError("insufficient samples")
    r = np.exp(g.x)
    f = g.y
    dl = r[1:-1] - r[:-2]
    dr = r[2:] - r[1:-1]
    fpp = 2 * ((f[2:] - f[1:-1]) / dr - (f[1:-1] - f[:-2]) / dl) / (dr + dl)
    fi = f[1:-1]
    return float(np.max(np.abs(r[1:-1] ** 2 * fpp + fi - fi**3)))


@dataclass(frozen=True)
class Agreement:
    sup_diff: float
    x_align: float
    x_worst: float
    first_order: tuple[Trajectory, Trajectory]  # backward and forward from the alignment point
    second_order: Trajectory


def compare_first_second(
    table: CoeffTable,
    a: float,
    x_span: float = 10.0,
    level: float = 0.5,
    tol: float = 1e-10,
    points: int = 2001,
) -> Agreement:
    """sup over x in [0, x_span] of |y_1st - y_2nd| after aligning at y = level.

    y_2nd solves the second-order problem with slope a.  The first-order
    equation is autonomous, so it is started from ``level`` at the x where
    y_2nd first reaches it and run both backwards to x = 0 and forwards to
    x_span.
    """
    second = integrate_second_order(a, x_span, tol, margin=None)
    x1 = crossing(second, level)
    back = integrate_first_order(table, level, -x1, tol)
    fwd = integrate_first_order(table, level, x_span - x1, tol)
    xs = np.linspace(0.0, x_span, points)
    y2, _ = second.at(xs)
    y1 = np.empty_like(xs)
    after = xs >= x1
    y1[after] = fwd.at(xs[after] - x1)[0]
    y1[~after] = back.at(np.maximum(xs[~after] - x1, back.x[0]))[0]
    d = np.abs(y1 - y2)
    i = int(np.argmax(d))
    return Agreement(float(d[i]), x1, float(xs[i]), (back, fwd), second)
