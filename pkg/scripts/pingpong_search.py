"""Find a separating set for two rational rotations of R^3 and build a
ping-pong pair from random SL3(Z) targets.

Slow: the separating-set search takes most of a minute.
"""
import argparse
from fractions import Fraction

import numpy as np

from titsdyn.linalg import Matrix
from titsdyn.pingpong import build_pingpong, find_separating, freeness_oracle


def rotations():
    c, s = Fraction(3, 5), Fraction(4, 5)
    return [Matrix.from_exact([[1, 0, 0], [0, c, -s], [0, s, c]]),
            Matrix.from_exact([[c, -s, 0], [s, c, 0], [0, 0, 1]])]


def random_sl3z(rng):
    while True:
        m = rng.integers(-3, 4, (3, 3))
        if round(np.linalg.det(m)) == 1:
            return Matrix.from_exact(m.tolist())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--oracle-len", type=int, default=6)
    args = ap.parse_args()
    gens = rotations()
    sep = find_separating(gens, 2)
    print(f"separating set: {len(sep.F)} elements, r = {sep.r:.5f}")
    rng = np.random.default_rng(args.seed)
    targets = [random_sl3z(rng) for _ in range(2)]
    gamma = Matrix.from_exact([[10 ** 8, 0, 0], [0, 1, 0], [0, 0, Fraction(1, 10 ** 8)]])
    cert = build_pingpong(targets, gamma, sep)
    print(f"ping-pong certificate: r = {cert.r:.4g}, epsilon = {cert.epsilon:.3g}")
    print("oracle:", freeness_oracle(cert.elements, args.oracle_len).describe())


if __name__ == "__main__":
    main()
