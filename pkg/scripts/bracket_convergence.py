"""Print the two-sided bracket for a* as the truncation order grows.

    python scripts/bracket_convergence.py --n 400 --every 20
"""

import argparse

import mpmath

from connexion import compute_coeffs, radius_estimate
from connexion.series import bracket_sequence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--every", type=int, default=20)
    args = ap.parse_args()

    table = compute_coeffs(args.n)
    print(f"{'N':>6}  {'lower':>24}  {'upper':>24}  {'width':>10}")
    for b in bracket_sequence(table, start=3):
        if b.n1 % args.every == 0 or b.n1 in (3, args.n):
            print(f"{b.n1:>6}  {mpmath.nstr(b.lower, 20):>24}  {mpmath.nstr(b.upper_real, 20):>24}  "
                  f"{mpmath.nstr(b.width, 3):>10}")
    if args.n >= 23:
        r = radius_estimate(table)
        print(f"radius estimate from the last {r.window} ratios: {mpmath.nstr(r.estimate, 8)}")


if __name__ == "__main__":
    main()
