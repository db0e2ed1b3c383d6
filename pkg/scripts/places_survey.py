"""Tally expanding-place verdicts over random algebraic numbers."""
import argparse
from collections import Counter
from fractions import Fraction

import numpy as np
import sympy

from titsdyn.places import AlgebraicNumber, expanding_place

X = sympy.Symbol("x")


def random_number(rng, max_degree):
    while True:
        d = int(rng.integers(1, max_degree + 1))
        co = [Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 3))) for _ in range(d)] + [Fraction(1)]
        poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(co)], X)
        if co[0] != 0 and poly.is_irreducible:
            return AlgebraicNumber(tuple(co), int(rng.integers(0, d)))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=300)
    ap.add_argument("--max-degree", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    tally, by_degree = Counter(), Counter()
    for _ in range(args.count):
        alpha = random_number(rng, args.max_degree)
        kind = expanding_place(alpha).kind
        tally[kind] += 1
        by_degree[(alpha.degree, kind)] += 1
    print(dict(tally))
    for d in range(1, args.max_degree + 1):
        row = {k: by_degree[(d, k)] for k in ("real", "complex", "padic", "root_of_unity") if by_degree[(d, k)]}
        print(f"degree {d}: {row}")


if __name__ == "__main__":
    main()
