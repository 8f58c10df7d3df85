"""Tabulate delta, delta1, K and the sector margin over a grid of (A, C3)."""

import argparse

import mpmath

from vortgrowth.initial_data import sector_margin, choose_s, theoretical_constants


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--A", type=float, nargs="+", default=[2, 3, 5])
    p.add_argument("--C3", type=float, nargs="+", default=[0.5, 1, 2])
    p.add_argument("--C2", type=float, default=1.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--precision", type=int, default=50)
    args = p.parse_args()
    print(f"{'A':>4} {'C3':>4} {'delta':>12} {'delta1':>12} {'branch':>12} {'K':>12} {'margin':>10} {'log s(T)':>12}")
    for A in args.A:
        for C3 in args.C3:
            c = theoretical_constants(A, C3, args.precision)
            row = [mpmath.nstr(v, 6) for v in (c.delta, c.delta1)]
            print(f"{A:4g} {C3:4g} {row[0]:>12} {row[1]:>12} {c.delta1_branch:>12} "
                  f"{mpmath.nstr(c.K, 6):>12} {mpmath.nstr(sector_margin(c), 6):>10} "
                  f"{mpmath.nstr(choose_s(args.T, args.C2, c), 8):>12}")


if __name__ == "__main__":
    main()
