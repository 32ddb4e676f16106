"""Command-line interface.

    connexion coeffs --n 5
    connexion astar --method all --n 200 --format json
    connexion picard --k 20 --M 10 --eps0 0.01
    connexion shoot --x-max 30 --tol 1e-9
    connexion verify --suite exact
    connexion plot --what P --range 0:1 --n 100

Every command accepts --format json|csv|text, --precision DIGITS,
--cache [PATH] and --config FILE.  The config file holds flat key=value
lines (keys are the long option names, with - or _); flags given on the
command line win.  CONNEXION_CACHE overrides the default cache location.

JSON output is an object with "command", "config", "results" and "checks".
Numbers appear as {"exact", "decimal", "provenance"} where provenance is
"exact", "series-truncation" or "oracle".
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import mpmath
from mpmath import mpf

from . import __version__
from .cache import default_cache_path, load_or_compute
from .exact import CoeffTable, fraction_str
from .ode import ShootingError, integrate_second_order, shoot
from .picard import ConfigError, PicardError, compare_with_series, make_config, run_picard
from .series import astar_bounds, astar_series, astar_sqrt, bracket_sequence, eval_P, radius_estimate
from .verify import SUITES, run_suite


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Num:
    """A number together with how much it can be trusted."""

    decimal: str
    provenance: str
    exact: str | None = None

    def as_json(self) -> dict:
        return {"exact": self.exact, "decimal": self.decimal, "provenance": self.provenance}

    def __str__(self) -> str:
        tag = ""
        if self.exact is not None and self.exact != self.decimal:
            tag = f" [{self.exact}]" if len(self.exact) <= 60 else f" [exact, {len(self.exact)} chars]"
        return f"{self.decimal}{tag} ({self.provenance})"


def _dec(x, digits: int) -> str:
    if isinstance(x, Fraction):
        x = mpf(x.numerator) / x.denominator
    if isinstance(x, float):
        return repr(x)
    return mpmath.nstr(mpf(x), digits, min_fixed=-6, max_fixed=8)


def exact_num(x: Fraction, digits: int) -> Num:
    with mpmath.workdps(digits + 10):
        return Num(_dec(x, digits), "exact", fraction_str(x))


def series_num(x, digits: int, exact: Fraction | None = None) -> Num:
    with mpmath.workdps(digits + 10):
        return Num(_dec(x, digits), "series-truncation", None if exact is None else fraction_str(exact))


def oracle_num(x) -> Num:
    """Numerical (non-rigorous) result, shown to double precision."""
    return Num(repr(float(x)), "oracle")


# ---------------------------------------------------------------- options

DEFAULTS = {
    "format": "text",
    "precision": 50,
    "n": 200,
    "n1": None,
    "n2": None,
    "method": "all",
    "k": 20,
    "M": "10",
    "eps0": "0.01",
    "quad_nodes": 32,
    "grid_nodes": 64,
    "series_n": 200,
    "x_max": 30.0,
    "tol": 1e-9,
    "rk_tol": 1e-10,
    "margin": 0.02,
    "suite": "all",
    "what": "P",
    "range": "0:1",
    "points": 101,
    "trajectory": False,
    "timings": False,
}
CONVERT = {
    "precision": int, "n": int, "n1": int, "n2": int, "k": int, "quad_nodes": int,
    "grid_nodes": int, "series_n": int, "x_max": float, "tol": float, "rk_tol": float,
    "margin": float, "points": int,
    "trajectory": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "timings": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def read_config(path: str) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS and key != "cache":
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONVERT.get(key, str)(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "text"], default=None)
    common.add_argument("--precision", type=int, default=None, help="decimal digits (>= 15)")
    common.add_argument("--cache", nargs="?", const="", default=None, metavar="PATH",
                        help="read/write the coefficient cache (default location if PATH omitted)")
    common.add_argument("--config", default=None, metavar="FILE", help="key=value defaults")

    p = argparse.ArgumentParser(prog="connexion", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("coeffs", parents=[common], help="exact series coefficients")
    c.add_argument("--n", type=_positive, default=None)

    a = sub.add_parser("astar", parents=[common], help="estimates and bracket for a*")
    a.add_argument("--method", choices=["series", "sqrt", "bounds", "shoot", "all"], default=None)
    a.add_argument("--n", type=_positive, default=None)
    a.add_argument("--n1", type=int, default=None)
    a.add_argument("--n2", type=int, default=None)

    q = sub.add_parser("picard", parents=[common], help="fixed-point iteration near 0")
    q.add_argument("--k", type=_positive, default=None)
    q.add_argument("--M", default=None)
    q.add_argument("--eps0", default=None)
    q.add_argument("--quad-nodes", type=_positive, default=None)
    q.add_argument("--grid-nodes", type=_positive, default=None)
    q.add_argument("--series-n", type=_positive, default=None)

    s = sub.add_parser("shoot", parents=[common], help="bisection shooting oracle")
    s.add_argument("--x-max", type=float, default=None)
    s.add_argument("--tol", type=float, default=None, help="bisection bracket width")
    s.add_argument("--rk-tol", type=float, default=None, help="integrator tolerance")
    s.add_argument("--margin", type=float, default=None)
    s.add_argument("--trajectory", action="store_true", default=None,
                   help="emit the trajectory at the midpoint instead of the summary")

    v = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    v.add_argument("--suite", choices=list(SUITES), default=None)
    v.add_argument("--timings", action="store_true", default=None)

    g = sub.add_parser("plot", parents=[common], help="emit data for figures")
    g.add_argument("--what", choices=["P", "bracket", "trajectory"], default=None)
    g.add_argument("--range", default=None, help="lo:hi for --what P")
    g.add_argument("--n", type=_positive, default=None)
    g.add_argument("--points", type=_positive, default=None)
    return p


def resolve(ns: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if ns.command == "plot":
        cfg["format"] = "csv"
        cfg["n"] = 100
    if ns.config:
        cfg.update(read_config(ns.config))
    for key, value in vars(ns).items():
        if key in ("command", "config") or value is None:
            continue
        cfg[key] = value
    if cfg["precision"] < 15:
        raise UsageError("--precision must be at least 15")
    cache = cfg.get("cache")
    if cache is None:
        cfg["cache"] = None
    else:
        cfg["cache"] = str(default_cache_path()) if cache == "" else cache
    return cfg


# ---------------------------------------------------------------- commands


def _table(cfg: dict, N: int) -> CoeffTable:
    try:
        return load_or_compute(N, cfg["cache"])
    except OSError as exc:
        raise UsageError(f"cache {cfg['cache']}: {exc.strerror or exc}") from None


def cmd_coeffs(cfg: dict) -> tuple[list, list]:
    table = _table(cfg, cfg["n"])
    d = cfg["precision"]
    rows = [{"n": n, "b": exact_num(b, d)} for n, b in enumerate(table.coeffs, start=1)]
    return rows, []


def cmd_astar(cfg: dict) -> tuple[list, list]:
    N, d, method = cfg["n"], cfg["precision"], cfg["method"]
    n1 = cfg["n1"] if cfg["n1"] is not None else N
    n2 = cfg["n2"] if cfg["n2"] is not None else N
    if method in ("bounds", "all") and n1 < 2:
        raise UsageError("--n1 must be at least 2 for the lower bound")
    if method in ("bounds", "all") and n2 < 1:
        raise UsageError("--n2 must be at least 1")
    table = _table(cfg, max(N, n1, n2) if method in ("bounds", "all") else N)
    rows, checks = [], []
    series = sqrt = bracket = shot = None
    if method in ("series", "all"):
        e = astar_series(table.truncated(N), d)
        series = e.value
        rows.append({"quantity": "series", "N": N, "value": series_num(e.value, d, e.exact),
                     "est_tail": series_num(e.est_tail, 3)})
    if method in ("sqrt", "all"):
        e = astar_sqrt(table.truncated(N), d)
        row = {"quantity": "sqrt", "N": N, "radicand": exact_num(e.radicand, d)}
        if e.in_domain:
            sqrt = e.value
            row["value"] = series_num(e.value, d)
            row["est_tail"] = series_num(e.est_tail, 3)
        else:
            row["domain"] = "negative radicand"
        rows.append(row)
    if method in ("bounds", "all"):
        bracket = astar_bounds(table, n1, n2, d)
        rows.append({
            "quantity": "bracket", "n1": n1, "n2": n2,
            "lower_sq": exact_num(bracket.lower_sq, d),
            "lower": exact_num(_mpf_fraction(bracket.lower), d),
            "upper": exact_num(bracket.upper, d),
            "upper_real": exact_num(_mpf_fraction(bracket.upper_real), d),
            "width": series_num(bracket.width, 6),
        })
    if method in ("shoot", "all"):
        res = _shoot(cfg)
        shot = mpf(res.midpoint)
        rows.append({"quantity": "shoot", "a_lo": oracle_num(res.a_lo), "a_hi": oracle_num(res.a_hi),
                     "midpoint": oracle_num(res.midpoint), "iterations": res.iterations})
    if method == "all" and N >= 23:
        r = radius_estimate(table.truncated(N), dps=d)
        rows.append({"quantity": "radius", "N": N, "window": r.window, "value": series_num(r.estimate, 8)})
    if method == "all":
        width = bracket.width
        if series is not None and sqrt is not None:
            gap = abs(series - sqrt)
            checks.append(_check("series-vs-sqrt", gap <= 10 * width, gap, "10 x bracket width"))
        if shot is not None:
            gap = abs(shot - series)
            allowed = max(mpf("1e-6"), width, mpf(res.width))
            checks.append(_check("shoot-vs-series", gap <= allowed, gap, f"{mpmath.nstr(allowed, 3)}"))
    return rows, checks


def _mpf_fraction(x: mpf) -> Fraction:
    man, exp = int(x.man), int(x.exp)
    return Fraction(man << exp) if exp >= 0 else Fraction(man, 1 << -exp)


def _check(name: str, passed: bool, measured, bound: str, note: str = "") -> dict:
    return {"name": name, "status": "pass" if passed else "fail",
            "measured": mpmath.nstr(mpf(measured), 6) if not isinstance(measured, str) else measured,
            "bound": bound, "note": note}


def cmd_picard(cfg: dict) -> tuple[list, list]:
    try:
        pc = make_config(_num_arg(cfg["M"]), _num_arg(cfg["eps0"]), cfg["quad_nodes"], cfg["grid_nodes"])
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    run = run_picard(pc, cfg["k"])
    table = _table(cfg, cfg["series_n"])
    rows = []
    for step, q in zip(run.steps, run.iterates):
        rows.append({
            "n": step.n + 1,
            "sup_diff": oracle_num(step.sup_diff),
            "ratio": oracle_num(step.ratio) if step.ratio is not None else None,
            "sup_diff_over_z": oracle_num(step.sup_diff_over_z),
            "bound": exact_num(pc.M * pc.gamma**step.n, 17),
            "bound_ratio": oracle_num(q.bound_ratio(pc.M)),
            "series_gap": oracle_num(compare_with_series(q, table, dps=pc.dps)),
        })
    gamma = mpf(pc.gamma.numerator) / pc.gamma.denominator
    checks = [
        _check("iterate-bound", run.max_bound_ratio <= 1, run.max_bound_ratio, "|q_n - 1| <= M|z|"),
        _check("contraction", run.max_ratio <= gamma + run.ratio_slack, run.max_ratio,
               f"gamma = {fraction_str(pc.gamma)}"),
        _check("step-bound", all(s.within_bound for s in run.steps),
               max(s.sup_diff_over_z / s.bound for s in run.steps), "sup|dq|/|z| <= M gamma^n"),
    ]
    return rows, checks


def _num_arg(s) -> Fraction:
    try:
        return Fraction(str(s))
    except ValueError:
        raise UsageError(f"not a number: {s!r}") from None


def _shoot(cfg: dict):
    try:
        return shoot(x_max=cfg["x_max"], tol=cfg["tol"], margin=cfg["margin"], rk_tol=cfg["rk_tol"])
    except ShootingError as exc:
        raise UsageError(str(exc)) from None


def cmd_shoot(cfg: dict) -> tuple[list, list]:
    res = _shoot(cfg)
    if cfg["trajectory"]:
        traj = integrate_second_order(res.midpoint, cfg["x_max"], cfg["rk_tol"], cfg["margin"])
        return [{"x": repr(float(x)), "y": repr(float(y)), "yp": repr(float(p))}
                for x, y, p in traj.samples], []
    rows = [{"a_lo": oracle_num(res.a_lo), "a_hi": oracle_num(res.a_hi),
             "midpoint": oracle_num(res.midpoint), "width": oracle_num(res.width),
             "iterations": res.iterations}]
    return rows, []


def cmd_verify(cfg: dict) -> tuple[list, list]:
    report = run_suite(cfg["suite"], cfg["cache"])
    checks = []
    for c in report.checks:
        row = {"name": c.name, "status": c.status, "measured": c.measured, "bound": c.bound, "note": c.note}
        if cfg["timings"]:
            row["seconds"] = round(report.timings[c.name], 3)
        checks.append(row)
    return [], checks


def cmd_plot(cfg: dict) -> tuple[list, list]:
    what, N, pts = cfg["what"], cfg["n"], cfg["points"]
    if what == "P":
        try:
            lo, hi = (Fraction(s) for s in cfg["range"].split(":"))
        except ValueError:
            raise UsageError(f"--range must look like lo:hi, got {cfg['range']!r}") from None
        if pts < 2:
            raise UsageError("--points must be at least 2")
        table = _table(cfg, N)
        rows = []
        with mpmath.workdps(cfg["precision"]):
            for i in range(pts):
                z = lo + (hi - lo) * Fraction(i, pts - 1)
                e = eval_P(z, table, cfg["precision"])
                rows.append({"z": _dec(z, 17), "P": mpmath.nstr(e.value, 17)})
        return rows, []
    if what == "bracket":
        table = _table(cfg, N)
        return [{"N": b.n1, "lower": mpmath.nstr(b.lower, 17), "upper": mpmath.nstr(b.upper_real, 17)}
                for b in bracket_sequence(table, start=2)], []
    if what == "trajectory":
        res = _shoot(cfg)
        traj = integrate_second_order(res.midpoint, cfg["x_max"], cfg["rk_tol"], cfg["margin"])
        samples = traj.samples
        if traj.meta["stop"] == "event":
            samples = samples[:-1]  # the located event sits just outside the band
        return [{"x": repr(x), "y": repr(y), "yp": repr(p)} for x, y, p in samples], []
    raise UsageError(f"unknown plot target {what!r}")


COMMANDS = {
    "coeffs": cmd_coeffs,
    "astar": cmd_astar,
    "picard": cmd_picard,
    "shoot": cmd_shoot,
    "verify": cmd_verify,
    "plot": cmd_plot,
}

CONFIG_KEYS = {
    "coeffs": ["n"],
    "astar": ["method", "n", "n1", "n2", "x_max", "tol", "rk_tol", "margin"],
    "picard": ["k", "M", "eps0", "quad_nodes", "grid_nodes", "series_n"],
    "shoot": ["x_max", "tol", "rk_tol", "margin", "trajectory"],
    "verify": ["suite"],
    "plot": ["what", "range", "n", "points", "x_max", "tol", "rk_tol", "margin"],
}


# ---------------------------------------------------------------- output


def _plain(v):
    if isinstance(v, Num):
        return v.as_json()
    return v


def render_json(command: str, cfg: dict, rows: list, checks: list) -> str:
    config = {k: cfg[k] for k in ["precision", "format", "cache"] + CONFIG_KEYS[command]}
    doc = {
        "command": command,
        "config": config,
        "results": [{k: _plain(v) for k, v in r.items()} for r in rows],
        "checks": checks,
    }
    return json.dumps(doc, indent=2) + "\n"


def _columns(rows: list) -> list[str]:
    cols: list[str] = []
    for r in rows:
        for k, v in r.items():
            names = [k, f"{k}_exact", f"{k}_provenance"] if isinstance(v, Num) else [k]
            for name in names:
                if name not in cols:
                    cols.append(name)
    return cols


def render_csv(rows: list, checks: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows:
        cols = _columns(rows)
        w.writerow(cols)
        for r in rows:
            flat = {}
            for k, v in r.items():
                if isinstance(v, Num):
                    flat[k], flat[f"{k}_exact"], flat[f"{k}_provenance"] = v.decimal, v.exact or "", v.provenance
                else:
                    flat[k] = "" if v is None else v
            w.writerow([flat.get(c, "") for c in cols])
    if checks:
        if rows:
            w.writerow([])
        cols = list(checks[0])
        w.writerow(cols)
        for c in checks:
            w.writerow([c.get(k, "") for k in cols])
    return buf.getvalue()


def render_text(command: str, rows: list, checks: list) -> str:
    out = []
    for r in rows:
        if command == "coeffs":
            b = r["b"]
            out.append(f"b_{r['n']} = {b.exact}  ~ {b.decimal}")
            continue
        out.append("  ".join(f"{k}={v}" for k, v in r.items() if v is not None))
    for c in checks:
        line = f"[{c['status'].upper()}] {c['name']}: {c['measured']} (bound {c['bound']})"
        if c.get("note"):
            line += f"  {c['note']}"
        if "seconds" in c:
            line += f"  [{c['seconds']:.1f} s]"
        out.append(line)
    return "\n".join(out) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve(ns)
        with mpmath.workdps(cfg["precision"]):
            rows, checks = COMMANDS[ns.command](cfg)
    except UsageError as exc:
        print(f"connexion {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (PicardError, ArithmeticError) as exc:
        print(f"connexion {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    fmt = cfg["format"]
    if fmt == "json":
        text = render_json(ns.command, cfg, rows, checks)
    elif fmt == "csv":
        text = render_csv(rows, checks)
    else:
        text = render_text(ns.command, rows, checks)
    sys.stdout.write(text)
    failed = any(c["status"] != "pass" for c in checks)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
