"""Write the JSON fixtures used by the CLI examples and the tests.

Run from the repository root:  python3 scripts/make_fixtures.py [--with-search]

--with-search also reruns the (slow) separating-set search and records the
machine-found r for the SO(3) generators.
"""
import argparse
import json
from fractions import Fraction
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def q(x) -> str:
    return str(Fraction(x))


def rows(m):
    return [[q(x) for x in r] for r in m]


def rotated_diagonal_pair():
    # diag(100, 1/100) and its conjugate by the rotation through pi/4;
    # u diag(a, b) u^T = (1/2)[[a+b, a-b], [a-b, a+b]] stays rational
    a, b = Fraction(100), Fraction(1, 100)
    g = [[a, 0], [0, b]]
    h = [[(a + b) / 2, (a - b) / 2], [(a - b) / 2, (a + b) / 2]]
    return {"schema_version": 1, "field": {"kind": "real"}, "constants": {"c1": 4.0, "c2": 4.0, "C": 10.0},
            "matrices": [rows(g), rows(h)]}


def pair(g, h, **extra):
    return {"schema_version": 1, "field": {"kind": "real"}, "matrices": [rows(g), rows(h)], **extra}


FIXTURES = {
    "pingpong_rotated_pair.json": rotated_diagonal_pair(),
    "pingpong_commuting.json": pair([[100, 0], [0, Fraction(1, 100)]], [[200, 0], [0, Fraction(1, 200)]],
                                    constants={"c1": 4.0, "c2": 4.0, "C": 10.0}),
    "pingpong_duplicated.json": pair([[100, 0], [0, Fraction(1, 100)]], [[100, 0], [0, Fraction(1, 100)]],
                                     constants={"c1": 4.0, "c2": 4.0, "C": 10.0}),
    "oracle_sanov_pair.json": pair([[1, 2], [0, 1]], [[1, 0], [2, 1]]),
    "oracle_commuting_diagonals.json": pair([[2, 0], [0, Fraction(1, 2)]], [[3, 0], [0, Fraction(1, 3)]]),
    "matrix_diag_1e4.json": {"schema_version": 1, "field": {"kind": "real"},
                             "rows": rows([[10000, 0, 0], [0, 1, 0], [0, 0, 1]])},
    "matrix_diag_1e8.json": {"schema_version": 1, "field": {"kind": "real"},
                             "rows": rows([[10 ** 8, 0, 0], [0, 1, 0], [0, 0, 1]])},
    "matrix_padic_5.json": {"schema_version": 1, "field": {"kind": "padic", "p": 5, "precision": 16},
                            "rows": rows([[25, 1, 0], [3, Fraction(1, 5), 2], [0, 7, 1]])},
    "semigroup_real.json": {"field": {"kind": "real"},
                            "elements": [{"a": q(Fraction(1, 10)), "b": "0"}, {"a": q(Fraction(1, 10)), "b": "1"}]},
    "semigroup_padic5.json": {"field": {"kind": "padic", "p": 5},
                              "elements": [{"a": "5", "b": "0"}, {"a": "5", "b": "1"}, {"a": "5", "b": "2"}]},
    "semigroup_collision.json": {"field": {"kind": "real"},
                                 "elements": [{"a": "1/2", "b": "0"}, {"a": "1/3", "b": "0"}]},
    "growth_discrete.json": {"ambient": {"kind": "translations", "basis": ["1"]},
                             "generators": [["1"]], "R": 2.5, "N": 20},
    "growth_abelian.json": {"ambient": {"kind": "translations", "basis": ["1", "sqrt(2)"]},
                            "generators": [["1", "0"], ["0", "1"]], "R": 10, "N": 30},
    "growth_affine.json": {"ambient": {"kind": "affine"},
                           "generators": [{"a": "2", "b": "0"}, {"a": "1", "b": "1"}], "R": 5, "N": 18},
    "polynomial_x2_minus_2.json": {"field": {"kind": "real"}, "coeffs": ["-2", "0", "1"]},
    "place_golden.json": {"minpoly": "x^2 - x - 1"},
}


def separating_fixture():
    from titsdyn.linalg import Matrix
    from titsdyn.pingpong import find_separating
    c, s = Fraction(3, 5), Fraction(4, 5)
    rx = Matrix.from_exact([[1, 0, 0], [0, c, -s], [0, s, c]])
    rz = Matrix.from_exact([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    out = {"generators": [rows(rx.exact), rows(rz.exact)]}
    for m in (1, 2):
        sep = find_separating([rx, rz], m)
        out[f"m{m}"] = sep.to_json()
    return out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--with-search", action="store_true")
    args = ap.parse_args()
    OUT.mkdir(exist_ok=True)
    for name, obj in FIXTURES.items():
        (OUT / name).write_text(json.dumps(obj, indent=2) + "\n")
    if args.with_search:
        (OUT / "separating_so3.json").write_text(json.dumps(separating_fixture(), indent=2) + "\n")
    print(f"wrote {len(FIXTURES)} fixtures to {OUT}")


if __name__ == "__main__":
    main()
