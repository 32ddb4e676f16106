"""Step-by-step contraction of the fixed-point iteration near z = 0."""

import argparse
from fractions import Fraction

import mpmath

from connexion import compute_coeffs
from connexion.picard import compare_with_series, make_config, run_picard


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--M", default="10")
    ap.add_argument("--eps0", default="1/100")
    args = ap.parse_args()

    cfg = make_config(Fraction(args.M), Fraction(args.eps0))
    table = compute_coeffs(200)
    run = run_picard(cfg, args.k)
    print(f"M = {cfg.M}, eps = {cfg.eps}, gamma = {cfg.gamma} = {float(cfg.gamma):.6f}")
    print(f"{'n':>3}  {'sup|dq|':>10}  {'ratio':>8}  {'sup|dq|/|z|':>11}  {'M g^n':>10}  {'series gap':>10}")
    for step, q in zip(run.steps, run.iterates):
        ratio = "-" if step.ratio is None else mpmath.nstr(step.ratio, 5)
        gap = compare_with_series(q, table, dps=cfg.dps)
        print(f"{step.n + 1:>3}  {mpmath.nstr(step.sup_diff, 3):>10}  {ratio:>8}  "
              f"{mpmath.nstr(step.sup_diff_over_z, 3):>11}  {mpmath.nstr(step.bound, 3):>10}  "
              f"{mpmath.nstr(gap, 3):>10}")
    print(f"worst |q_n - 1| / (M|z|) = {mpmath.nstr(run.max_bound_ratio, 4)}")


if __name__ == "__main__":
    main()
