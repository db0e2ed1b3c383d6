"""Places of Q(alpha) where an algebraic number alpha is expanding.

An algebraic number that is not a root of unity has absolute value > 1 at
some place: either a complex conjugate lies outside the unit circle, or
alpha is not an algebraic integer and a p-adic place with p dividing a
denominator of the minimal polynomial sees it as large.  If neither happens,
Kronecker's theorem says alpha is a root of unity, and the order is found by
exact arithmetic modulo the minimal polynomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import sympy

from .errors import InputError, PrecisionEscalationNeeded

_X = sympy.Symbol("x")


def _as_fractions(coeffs) -> tuple:
    out = []
    for c in coeffs:
        if isinstance(c, (sympy.Rational, sympy.Integer)):
            out.append(Fraction(int(c.p), int(c.q)))
        else:
            out.append(Fraction(c))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class AlgebraicNumber:
    """A root of `minpoly` (ascending rational coefficients, made monic).

    `index` selects a root in the order returned by `roots()`: sorted by
    real part, then imaginary part.
    """

    minpoly: tuple
    index: int = 0

    def __post_init__(self):
        co = _as_fractions(self.minpoly)
        while co and co[-1] == 0:
            co = co[:-1]
        if len(co) < 2:
            raise InputError("minimal polynomial must have degree >= 1")
        lead = co[-1]
        object.__setattr__(self, "minpoly", tuple(c / lead for c in co))
        if not 0 <= self.index < self.degree:
            raise InputError(f"root index {self.index} out of range")

    @property
    def degree(self) -> int:
        return len(self.minpoly) - 1

    @classmethod
    def parse(cls, text: str, index: int = 0, check_irreducible: bool = True) -> "AlgebraicNumber":
        try:
            poly = sympy.Poly(sympy.sympify(text.replace("^", "**"), locals={"x": _X, "X": _X}), _X)
        except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
            raise InputError(f"cannot parse {text!r}: {exc}") from exc
        if check_irreducible and not poly.is_irreducible:
            raise InputError(f"{text!r} is reducible over Q")
        return cls(tuple(reversed(_as_fractions(poly.all_coeffs()))), index)

    @classmethod
    def rational(cls, q) -> "AlgebraicNumber":
        q = Fraction(q)
        return cls((-q, Fraction(1)))

    def sympy_poly(self) -> sympy.Poly:
        return sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(self.minpoly)], _X)

    def roots(self, dps: int = 30) -> list:
        with mpmath.workdps(dps):
            co = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(self.minpoly)]
            if self.degree == 1:
                rts = [-co[1] / co[0]]
            else:
                rts = mpmath.polyroots(co, maxsteps=500, extraprec=2 * dps)
            rts = [mpmath.mpc(r) for r in rts]
            return sorted(rts, key=lambda z: (float(mpmath.re(z)), float(mpmath.im(z))))

    def to_json(self) -> dict:
        return {"minpoly": [str(c) for c in self.minpoly], "index": self.index}


@dataclass
class Place:
    kind: str  # real, complex, padic, root_of_unity
    absolute_value: float | Fraction | None
    root_index: int | None = None
    p: int | None = None
    order: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def expanding(self) -> bool:
        return self.kind != "root_of_unity"

    def to_json(self) -> dict:
        av = self.absolute_value
        return {"kind": self.kind,
                "absolute_value": str(av) if isinstance(av, Fraction) else av,
                "root_index": self.root_index, "p": self.p, "order": self.order, "details": self.details}


def newton_slopes(coeffs: Sequence[Fraction], p: int) -> list[tuple[Fraction, int]]:
    """(slope, multiplicity) of the lower convex hull of (i, v_p(a_i)).

    A segment of slope s carries that many roots of valuation -s, so a
    positive slope means roots with |root|_p = p^s > 1.
    """
    from .field import rational_valuation
    pts = [(i, Fraction(rational_valuation(c, p))) for i, c in enumerate(coeffs) if c != 0]
    hull: list = []
    for pt in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    out = []
    for (x1, y1), (x2, y2) in zip(hull[:-1], hull[1:]):
        out.append(((y2 - y1) / (x2 - x1), x2 - x1))
    return out


def _power_is_one(minpoly_sym: sympy.Poly, m: int) -> bool:
    r = sympy.rem(sympy.Poly(_X ** m - 1, _X), minpoly_sym)
    return r.is_zero


def root_of_unity_order(alpha: AlgebraicNumber) -> int | None:
    """Least m with alpha^m = 1, by exact reduction modulo the minimal polynomial."""
    d = alpha.degree
    # Euler's phi(m) = d forces m <= 2 d^2 for d >= 1
    bound = 2 * d * d + 2
    P = alpha.sympy_poly()
    for m in range(1, bound + 1):
        if sympy.totient(m) != d:
            continue
        if _power_is_one(P, m):
            return m
    return None


def expanding_place(alpha: AlgebraicNumber, margin: float = 1e-9, dps: int = 30,
                    max_dps: int = 240) -> Place:
    if alpha.degree > 16:
        raise InputError("degree above 16 is outside the supported range")
    if alpha.minpoly == (0, 1):
        raise InputError("zero has no expanding place and is not a root of unity")
    while True:
        roots = alpha.roots(dps)
        mods = [abs(r) for r in roots]
        best = max(range(len(roots)), key=lambda i: mods[i])
        # uncertainty of the root moduli at this precision
        ambiguous = any(abs(m - 1) <= mpmath.mpf(10) ** (-dps // 3) for m in mods) and \
            not any(m > 1 + margin for m in mods)
        if mods[best] > 1 + margin:
            z = roots[best]
            real = abs(mpmath.im(z)) <= mpmath.mpf(10) ** (-dps // 2) * (1 + abs(z))
            return Place("real" if real else "complex", float(mods[best]), root_index=best,
                         details={"modulus": mpmath.nstr(mods[best], 20), "dps": dps})
        break_out = not ambiguous or dps >= max_dps
        if break_out:
            break
        dps *= 2
    # all conjugates have modulus <= 1 + margin
    denominators = math.lcm(*[c.denominator for c in alpha.minpoly])
    for p in sorted(sympy.primefactors(denominators)):
        slopes = newton_slopes(alpha.minpoly, p)
        top = max(s for s, _ in slopes)
        if top > 0:
            return Place("padic", Fraction(p) ** top, p=p, details={"newton_slopes": [(str(s), m) for s, m in slopes]})
    order = root_of_unity_order(alpha)
    if order is not None:
        return Place("root_of_unity", 1.0, order=order, details={"verified": f"x^{order} = 1 mod minpoly"})
    raise PrecisionEscalationNeeded(
        f"conjugate moduli are within the margin of 1 but alpha is not a root of unity (dps {dps})")


def unbounded_embedding(I: Sequence, l: int) -> tuple[Place, Fraction]:
    """Place among the real one and p | l where some element of I is largest."""
    elems = [Fraction(x) for x in I]
    if not elems:
        raise InputError("empty set")
    primes = sorted(sympy.primefactors(l)) if l > 1 else []
    for x in elems:
        d = x.denominator
        for p in sympy.primefactors(d):
            if p not in primes:
                raise InputError(f"{x} is not in Z[1/{l}]")
    from .field import abs_value, FieldDescriptor
    best_x = max(elems, key=lambda x: (abs(x), -elems.index(x)))
    best = (abs(best_x), Place("real", float(abs(best_x))), best_x)
    for p in primes:
        F = FieldDescriptor.padic(p)
        x = max(elems, key=lambda y: (abs_value(y, F), -elems.index(y)))
        v = abs_value(x, F)
        if v > best[0]:
            best = (v, Place("padic", v, p=p), x)
    return best[1], best[2]
