"""Growth tables for a discrete, an abelian dense and an affine subgroup.

Prints f(n) and the classifier verdict for each, plus how the verdict moves
with the radius R.
"""
import argparse
import math

from titsdyn.growth import AffineLine, Translations, classify, growth_table


def run(label, S, ambient, N):
    table = growth_table(S, ambient, N)
    cls = classify(table)
    extra = f"rate {cls.rate:.3f}" if cls.rate else f"degree {cls.degree:.2f}" if cls.degree else ""
    print(f"{label:<28} R={ambient.R:<5} f(N)={table.values[-1]:<7} {cls.verdict:<12} {extra}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=18)
    args = ap.parse_args()
    for R in (2.5, 6.0):
        run("Z in R", [(1,)], Translations([1.0], R), args.N)
    for R in (4.0, 10.0):
        run("Z + sqrt(2) Z in R", [(1, 0), (0, 1)], Translations([1.0, math.sqrt(2)], R), max(args.N, 30))
    for R in (3.0, 5.0):
        run("<2x, x+1> in Aff(R)", [(2, 0), (1, 1)], AffineLine(R), args.N)


if __name__ == "__main__":
    main()
