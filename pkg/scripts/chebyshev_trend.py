"""Measure of {|P| <= 1} for monic Chebyshev polynomials of growing degree.

The real sublevel set of the rescaled T_d is a single interval of length
4 * 2^(-1/d), which tends to 4 from below.
"""
import argparse

from titsdyn.polya import chebyshev, measure_real


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-degree", type=int, default=64)
    args = ap.parse_args()
    d = 1
    print(f"{'degree':>6}  {'measure':>12}  {'4 - measure':>12}")
    while d <= args.max_degree:
        mu = measure_real(chebyshev(d)).value
        print(f"{d:>6}  {mu:>12.8f}  {4 - mu:>12.3e}")
        d *= 2


if __name__ == "__main__":
    main()
