"""Compare the shooting estimate of a* with the series value.

Also shows how far the first- and second-order trajectories drift apart
over [0, 10] for each launch slope.
"""

import argparse

from connexion import astar_series, compute_coeffs
from connexion.ode import compare_first_second, shoot


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--tol", type=float, default=1e-9)
    args = ap.parse_args()

    table = compute_coeffs(args.n)
    series = float(astar_series(table).value)
    res = shoot(tol=args.tol)
    print(f"series a*   {series!r}")
    print(f"shoot       [{res.a_lo!r}, {res.a_hi!r}] after {res.iterations} bisections")
    print(f"difference  {abs(res.midpoint - series):.3e}")

    print("\nfirst/second-order gap on [0, 10] (rk tol 1e-10):")
    for a, label in ((series, "series a*"), (res.midpoint, "shot midpoint")):
        agree = compare_first_second(table, a, x_span=10.0)
        print(f"  launched at {label:<14} sup gap {agree.sup_diff:.3e} at x = {agree.x_worst:.2f}")


if __name__ == "__main__":
    main()
