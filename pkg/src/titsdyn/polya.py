"""Measure of the sublevel set A_P = {x : |P(x)| <= 1} for monic P.

Over R the set is decomposed into intervals between critical points, over C
it is estimated by Monte Carlo inside a certified disc, and over Q_p balls
c + p^k Z_p are refined until |P| is constant or bounded by 1 on each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq
from scipy.stats import binomtest

from .errors import BoundViolated, BudgetExceeded, InputError, NonIntegrableSingularity, RootIsolationFailure
from .field import FieldDescriptor, rational_valuation

_DPS = 50


@dataclass(frozen=True, eq=False)
class MonicPolynomial:
    """Coefficients in ascending order; the last one is exactly 1."""

    field: FieldDescriptor
    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) < 2:
            raise InputError("degree must be at least 1")
        if self.coeffs[-1] != 1:
            raise InputError("polynomial must be monic")
        if self.field.kind == "padic" and not all(isinstance(c, (int, Fraction)) for c in self.coeffs):
            raise InputError("p-adic polynomials need rational coefficients")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c in self.coeffs)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence, field: FieldDescriptor | None = None) -> "MonicPolynomial":
        field = field or FieldDescriptor.real()
        out = tuple(Fraction(c) if isinstance(c, (int, Fraction)) else c for c in coeffs)
        return cls(field, out)

    @classmethod
    def from_roots(cls, roots: Sequence, field: FieldDescriptor | None = None) -> "MonicPolynomial":
        coeffs = [Fraction(1) if all(isinstance(r, (int, Fraction)) for r in roots) else 1.0]
        for r in roots:
            nxt = [0 * coeffs[0]] * (len(coeffs) + 1)
            for i, c in enumerate(coeffs):
                nxt[i + 1] += c
                nxt[i] -= r * c
            coeffs = nxt
        coeffs[-1] = 1
        return cls.from_coeffs(coeffs, field)

    @classmethod
    def parse(cls, text: str, field: FieldDescriptor | None = None) -> "MonicPolynomial":
        import sympy
        x = sympy.Symbol("x")
        try:
            poly = sympy.Poly(sympy.sympify(text.replace("^", "**"), locals={"x": x, "X": x}), x)
        except (sympy.SympifyError, sympy.PolynomialError, TypeError) as exc:
            raise InputError(f"cannot parse polynomial {text!r}: {exc}") from exc
        coeffs = [Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in reversed(poly.all_coeffs())]
        return cls.from_coeffs(coeffs, field)

    def shifted(self, t) -> "MonicPolynomial":
        """P(X - t)."""
        return MonicPolynomial.from_coeffs(_taylor(self.coeffs, -t), self.field)

    def evaluate(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + (float(c) if isinstance(c, Fraction) and isinstance(x, (float, np.ndarray)) else c)
        return acc

    def mp_coeffs(self) -> list:
        return [mpmath.mpf(c.numerator) / c.denominator if isinstance(c, Fraction) else mpmath.mpmathify(c)
                for c in self.coeffs]

    def roots(self) -> list:
        with mpmath.workdps(_DPS):
            return _polyroots(self.mp_coeffs(), self.coeffs if self.is_exact else None)

    def to_json(self) -> dict:
        from .field import encode_scalar
        return {"field": self.field.to_json(), "coeffs": [encode_scalar(c) for c in self.coeffs]}


def _polyroots(coeffs_asc: list, exact: Sequence | None = None) -> list:
    """All complex roots with multiplicity.

    With exact rational coefficients the polynomial is first split into
    squarefree factors, since the numerical solver stalls on repeated roots.
    """
    if exact is not None:
        import sympy
        x = sympy.Symbol("x")
        poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in reversed(exact)], x)
        out = []
        for fac, mult in poly.sqf_list()[1]:
            co = [mpmath.mpf(int(c.p)) / int(c.q) for c in reversed(fac.all_coeffs())]
            out.extend(_polyroots(co) * mult)
        return out
    co = list(coeffs_asc)
    zeros = 0
    while len(co) > 1 and co[0] == 0:
        co.pop(0)
        zeros += 1
    zero = [mpmath.mpf(0)] * zeros
    if len(co) == 1:
        return zero
    if len(co) == 2:
        return zero + [-co[0] / co[1]]
    for steps, extra in ((400, 4 * _DPS), (4000, 16 * _DPS)):
        try:
            return zero + list(mpmath.polyroots(co[::-1], maxsteps=steps, extraprec=extra))
        except mpmath.libmp.libhyper.NoConvergence as exc:
            err = exc
    raise RootIsolationFailure(f"root finding did not converge: {err}")


def _taylor(coeffs: Sequence, c) -> list:
    """Coefficients of P(X + c)."""
    out = list(coeffs)
    n = len(out)
    for k in range(n - 1):
        for i in range(n - 2, k - 1, -1):
            out[i] = out[i] + c * out[i + 1]
    return out


@dataclass
class MeasureEstimate:
    value: float
    method: str
    lower: float
    upper: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"value": self.value, "method": self.method, "interval": [self.lower, self.upper],
                "details": self.details}


# real line

def _real_pieces(P: MonicPolynomial) -> tuple[list, object]:
    with mpmath.workdps(_DPS):
        co = P.mp_coeffs()
        dco = [i * co[i] for i in range(1, len(co))]
        crit = []
        if len(dco) > 1:
            dex = [i * P.coeffs[i] for i in range(1, len(co))] if P.is_exact else None
            for r in _polyroots(dco, dex):
                if abs(mpmath.im(r)) <= mpmath.mpf(10) ** (-_DPS // 3) * (1 + abs(r)):
                    crit.append(mpmath.re(r))
        crit.sort()
        # |P| > 1 beyond the Cauchy bound plus one
        bound = 2 + max(abs(c) for c in co[:-1])
        return [-bound] + crit + [bound], co


def measure_real(P: MonicPolynomial) -> MeasureEstimate:
    pts, co = _real_pieces(P)
    with mpmath.workdps(_DPS):
        def f(x):
            return mpmath.polyval(co[::-1], x)

        total = mpmath.mpf(0)
        intervals = []
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi - lo <= 0:
                continue
            flo, fhi = f(lo), f(hi)
            # P is monotone on [lo, hi]; |P| <= 1 is an interval there
            a = _cross(f, lo, hi, flo, fhi, increasing=fhi >= flo, level_lo=True)
            b = _cross(f, lo, hi, flo, fhi, increasing=fhi >= flo, level_lo=False)
            if a is None or b is None or b <= a:
                continue
            total += b - a
            intervals.append((a, b))
        merged = _merge(intervals)
        total = sum((b - a for a, b in merged), mpmath.mpf(0))
        v = float(total)
    return MeasureEstimate(v, "RootIntervals", v, v, {"intervals": [(float(a), float(b)) for a, b in merged]})


def _merge(iv):
    out = []
    for a, b in sorted(iv):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _cross(f, lo, hi, flo, fhi, increasing: bool, level_lo: bool):
    """Endpoint of {|P| <= 1} on a monotone piece: left end if level_lo."""
    # work with g increasing on the piece
    sgn = 1 if increasing else -1
    glo, ghi = sgn * flo, sgn * fhi
    if ghi < -1 or glo > 1:
        return None
    if level_lo:  # left end is where g = -1
        if glo >= -1:
            return lo
        target = -1
    else:
        if ghi <= 1:
            return hi
        target = 1
    g = lambda x: sgn * f(x) - target  # noqa: E731
    a, b = lo, hi
    for _ in range(200):
        m = (a + b) / 2
        if g(m) < 0:
            a = m
        else:
            b = m
        if b - a < mpmath.mpf(10) ** (-30):
            break
    return (a + b) / 2


# complex plane

def fujiwara_bound(coeffs: Sequence) -> float:
    d = len(coeffs) - 1
    vals = [abs(complex(coeffs[d - i])) ** (1 / i) for i in range(1, d)]
    vals.append((abs(complex(coeffs[0])) / 2) ** (1 / d))
    return 2 * max(vals + [0.0])


def measure_complex(P: MonicPolynomial, samples: int = 1_000_000, seed: int = 0,
                    confidence: float = 0.95) -> MeasureEstimate:
    # |P(x)| <= 1 forces |x - root| <= 1 for some root
    radius = fujiwara_bound(P.coeffs) + 1
    rng = np.random.default_rng(seed)
    coeffs = [complex(c) for c in P.coeffs]
    hits = 0
    chunk = 250_000
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        r = radius * np.sqrt(rng.random(k))
        th = 2 * np.pi * rng.random(k)
        z = r * np.exp(1j * th)
        acc = np.zeros(k, dtype=complex)
        for c in reversed(coeffs):
            acc = acc * z + c
        hits += int(np.count_nonzero(np.abs(acc) <= 1))
        done += k
    area = math.pi * radius ** 2
    ci = binomtest(hits, samples).proportion_ci(confidence_level=confidence, method="wilson")
    return MeasureEstimate(area * hits / samples, "MonteCarlo", float(area * ci.low), float(area * ci.high),
                           {"samples": samples, "confidence": confidence, "seed": seed, "disc_radius": radius})


# p-adic

def _val(q: Fraction, p: int):
    return math.inf if q == 0 else rational_valuation(q, p)


def _start_exponent(P: MonicPolynomial, p: int) -> int:
    d = P.degree
    K = 0
    for i, a in enumerate(P.coeffs[:-1]):
        if a != 0:
            K = max(K, math.ceil(-_val(Fraction(a), p) / (d - i)))
    return -K


def _ball_data(P: MonicPolynomial, c: Fraction, k: int, p: int):
    """Valuations of the coefficients of y -> P(c + p^k y)."""
    tay = _taylor([Fraction(x) for x in P.coeffs], c)
    vals = [_val(q, p) + j * k for j, q in enumerate(tay)]
    vmin = min(vals)
    jstar = max(j for j, v in enumerate(vals) if v == vmin)
    return vals, vmin, jstar


def _ball_walk(P: MonicPolynomial, balls, depth: int, max_balls: int, leaf):
    p = P.field.p
    stack = [(Fraction(c), k, 0) for c, k in balls]
    count = 0
    while stack:
        c, k, lvl = stack.pop()
        count += 1
        if count > max_balls:
            raise BudgetExceeded(f"more than {max_balls} residue balls")
        vals, vmin, jstar = _ball_data(P, c, k, p)
        if leaf(c, k, vals, vmin, jstar, lvl >= depth):
            continue
        step = Fraction(p) ** k
        for t in range(p - 1, -1, -1):
            stack.append((c + t * step, k + 1, lvl + 1))
    return count


def measure_padic(P: MonicPolynomial, depth: int = 12, max_balls: int = 2_000_000) -> MeasureEstimate:
    p = P.field.p
    k0 = _start_exponent(P, p)
    exact = Fraction(0)
    unresolved = Fraction(0)

    def leaf(c, k, vals, vmin, jstar, at_limit):
        nonlocal exact, unresolved
        mu = Fraction(p) ** (-k)
        if vmin >= 0:  # |P| <= 1 on the whole ball
            exact += mu
            return True
        if jstar == 0:  # |P| = |P(c)| > 1 on the whole ball
            return True
        if at_limit:
            unresolved += mu
            return True
        return False

    n = _ball_walk(P, [(0, k0)], depth, max_balls, leaf)
    lo, hi = exact, exact + unresolved
    method = "ResidueTree"
    return MeasureEstimate(float((lo + hi) / 2), method, float(lo), float(hi),
                           {"depth": depth, "balls": n, "exact": unresolved == 0,
                            "lower_exact": str(lo), "upper_exact": str(hi)})


def measure_AP(P: MonicPolynomial, budget: int | None = None, seed: int = 0) -> MeasureEstimate:
    """budget: Monte Carlo samples over C, residue depth over Q_p, unused over R."""
    kind = P.field.kind
    if kind == "real":
        if any(isinstance(c, complex) for c in P.coeffs):
            raise InputError("real polynomial with complex coefficients")
        return measure_real(P)
    if kind == "complex":
        return measure_complex(P, samples=budget or 1_000_000, seed=seed)
    return measure_padic(P, depth=budget or 12)


# constants

def polya_constant(field_desc: FieldDescriptor) -> float:
    """Constant proved by the integration argument."""
    if field_desc.kind == "real":
        return 2 * math.e
    if field_desc.kind == "complex":
        return math.pi * math.e
    return 1 + 1 / (field_desc.p - 1)


def best_constant(field_desc: FieldDescriptor) -> float | None:
    return {"real": 4.0, "complex": math.pi}.get(field_desc.kind)


@dataclass
class BoundReport:
    passed: bool
    measure: MeasureEstimate
    constant: float
    best_constant: float | None
    within_best: bool | None
    degree: int

    def to_json(self) -> dict:
        return {"passed": self.passed, "measure": self.measure.to_json(), "constant": self.constant,
                "best_constant": self.best_constant, "within_best": self.within_best, "degree": self.degree}


def check_bound(P: MonicPolynomial, budget: int | None = None, seed: int = 0) -> BoundReport:
    est = measure_AP(P, budget, seed)
    c = polya_constant(P.field)
    best = best_constant(P.field)
    within = None if best is None else est.upper <= best + 1e-12
    rep = BoundReport(est.upper <= c + 1e-12, est, c, best, within, P.degree)
    if not rep.passed:
        raise BoundViolated(f"measure upper bound {est.upper} exceeds {c}: {rep.to_json()}")
    return rep


def c1_constant(field_desc: FieldDescriptor) -> float:
    """Least measure m such that every set of measure >= m has integral of log|x| at least 1."""
    if field_desc.kind == "real":
        t = brentq(lambda t: 2 * (t * math.log(t) - t) - 1, math.e, 10)
        return 2 * t
    if field_desc.kind == "complex":
        t = brentq(lambda t: math.pi * t * t * (math.log(t) - 0.5) - 1, math.sqrt(math.e), 10)
        return math.pi * t * t
    p = field_desc.p
    lp = math.log(p)

    def ball(k):  # integral over |x| <= p^k
        return p ** k * (k * lp - lp / (p - 1))

    k = 0
    while ball(k) < 1:
        k += 1
    # fill the shell |x| = p^k, where log|x| = k log p, starting from the smaller ball
    return p ** (k - 1) + (1 - ball(k - 1)) / (k * lp)


# log-integrals

def _prim(t, b):
    """Antiderivative of log|t + i b| in t."""
    if b == 0:
        return t * mpmath.log(abs(t)) - t if t != 0 else mpmath.mpf(0)
    return t * mpmath.log(t * t + b * b) / 2 - t + b * mpmath.atan(t / b)


@dataclass
class IntegralEstimate:
    value: float
    error: float
    method: str
    measure: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error, "method": self.method, "measure": self.measure,
                "details": self.details}


def log_integral(P: MonicPolynomial, B, samples: int = 400_000, seed: int = 0, depth: int = 12) -> IntegralEstimate:
    """Integral of log|P| over B.

    B is a list of intervals (a, b) over R, a list of disjoint discs
    (center, radius) over C, and a list of disjoint balls (center, k) meaning
    center + p^k Z_p over Q_p.
    """
    kind = P.field.kind
    if kind == "real":
        with mpmath.workdps(_DPS):
            roots = P.roots()
            total = mpmath.mpf(0)
            meas = mpmath.mpf(0)
            for a, b in B:
                a, b = mpmath.mpf(a), mpmath.mpf(b)
                meas += b - a
                for z in roots:
                    x0, y0 = mpmath.re(z), mpmath.im(z)
                    total += _prim(b - x0, y0) - _prim(a - x0, y0)
            return IntegralEstimate(float(total), 1e-12 * (1 + abs(float(total))), "ClosedForm", float(meas))
    if kind == "complex":
        rng = np.random.default_rng(seed)
        coeffs = [complex(c) for c in P.coeffs]
        areas = np.array([math.pi * r * r for _, r in B])
        total, var = 0.0, 0.0
        for (c, r), area in zip(B, areas):
            n = max(1000, int(samples * area / areas.sum()))
            rad = r * np.sqrt(rng.random(n))
            z = complex(c) + rad * np.exp(2j * np.pi * rng.random(n))
            acc = np.zeros(n, dtype=complex)
            for co in reversed(coeffs):
                acc = acc * z + co
            with np.errstate(divide="ignore"):
                vals = np.log(np.abs(acc))
            if not np.all(np.isfinite(vals)):
                raise NonIntegrableSingularity("sample landed on a root; change the seed")
            total += area * vals.mean()
            var += area ** 2 * vals.var(ddof=1) / n
        se = math.sqrt(var)
        return IntegralEstimate(float(total), 1.96 * se, "MonteCarlo", float(areas.sum()), {"seed": seed, "samples": samples})
    p = P.field.p
    lp = math.log(p)
    exact = 0.0
    lo_extra, hi_extra = 0.0, 0.0

    def leaf(c, k, vals, vmin, jstar, at_limit):
        nonlocal exact, lo_extra, hi_extra
        mu = float(Fraction(p) ** (-k))
        if jstar == 0:
            exact += mu * (-vals[0] * lp)
            return True
        if at_limit:
            # Weierstrass preparation: log|P| = log|c_j*| + sum of j* terms log|y - alpha|, |alpha| <= 1
            top = -vals[jstar] * lp
            lo_extra += mu * (top - jstar * lp / (p - 1))
            hi_extra += mu * top
            return True
        return False

    meas = 0.0
    for c, k in B:
        meas += float(Fraction(p) ** (-k))
    _ball_walk(P, B, depth, 2_000_000, leaf)
    lo, hi = exact + lo_extra, exact + hi_extra
    return IntegralEstimate((lo + hi) / 2, (hi - lo) / 2, "ResidueTree", meas, {"depth": depth})


# families

def chebyshev(d: int) -> MonicPolynomial:
    """T_d(x / s) with s = 2^(1 - 1/d), the monic rescaling; A_P = [-s, s]."""
    T0, T1 = [1], [0, 1]
    if d == 0:
        raise InputError("degree must be at least 1")
    for _ in range(2, d + 1):
        T2 = [0] + [2 * x for x in T1]
        for i, x in enumerate(T0):
            T2[i] -= x
        T0, T1 = T1, T2
    with mpmath.workdps(2 * _DPS):
        s = mpmath.mpf(2) ** (1 - mpmath.mpf(1) / d)
        coeffs = [Fraction(str(mpmath.nstr(mpmath.mpf(x) / s ** i, 2 * _DPS - 5))) if x else Fraction(0)
                  for i, x in enumerate(T1)]
    coeffs[-1] = Fraction(1)
    return MonicPolynomial.from_coeffs(coeffs)


def random_monic(field_desc: FieldDescriptor, degree: int, rng: np.random.Generator,
                 scale: float = 2.0) -> MonicPolynomial:
    """Random monic polynomial; rational coefficients except over C."""
    if field_desc.kind == "complex":
        co = [complex(x, y) for x, y in scale * rng.standard_normal((degree, 2))] + [1.0]
        return MonicPolynomial(field_desc, tuple(co))
    if field_desc.kind == "padic":
        p = field_desc.p
        co = []
        for _ in range(degree):
            num = int(rng.integers(-p ** 3, p ** 3 + 1))
            den = p ** int(rng.integers(0, 3)) if rng.random() < 0.3 else 1
            co.append(Fraction(num, den))
        return MonicPolynomial.from_coeffs(co + [1], field_desc)
    co = [Fraction(int(rng.integers(-int(scale * 100), int(scale * 100) + 1)), 100) for _ in range(degree)]
    return MonicPolynomial.from_coeffs(co + [1], field_desc)
