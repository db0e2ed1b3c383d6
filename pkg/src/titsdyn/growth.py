"""Local growth of a finitely generated subgroup inside a Lie group.

f_{R,S}(n) counts the group elements reachable by words of length <= n in
S whose every prefix stays in the open ball B_R of a left-invariant gauge.
Three ambients are provided:

* Translations: a subgroup of R given by coordinates over a fixed basis,
  so that Z + Z*sqrt(2) is handled exactly.
* AffineLine: x -> a x + b with a > 0 and exact rational entries; the gauge
  is the hyperbolic distance between i and a*i + b in the upper half-plane,
  which is left-invariant because the affine group acts by isometries.
* MatrixGroup: Frobenius norm of the principal logarithm near the identity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import logm

from .config import DEFAULT, Config
from .errors import (CoverGap, InputError, InsufficientData, MissingFreenessPrerequisite,
                     StateExplosion)

SCHEMA_VERSION = 1


# ambients

class Translations:
    """Elements are coordinate tuples c, standing for sum c_k * basis_k."""

    kind = "translations"

    def __init__(self, basis: Sequence[float] = (1.0,), R: float = 1.0):
        self.basis = tuple(float(x) for x in basis)
        self.R = float(R)

    def identity(self):
        return tuple(Fraction(0) for _ in self.basis)

    def element(self, *coords):
        if len(coords) != len(self.basis):
            raise InputError(f"need {len(self.basis)} coordinates")
        return tuple(Fraction(c) for c in coords)

    def mul(self, g, h):
        return tuple(x + y for x, y in zip(g, h))

    def inv(self, g):
        return tuple(-x for x in g)

    def value(self, g) -> float:
        return float(sum(float(c) * b for c, b in zip(g, self.basis)))

    def gauge(self, g) -> float:
        return abs(self.value(g))

    def inside(self, g) -> bool:
        return self.gauge(g) < self.R

    def distance(self, g, h) -> float:
        return self.gauge(self.mul(self.inv(g), h))

    def key(self, g):
        return g

    def describe(self) -> dict:
        return {"kind": self.kind, "metric": "|x - y| on the real line", "basis": list(self.basis), "R": self.R}


class AffineLine:
    """x -> a x + b with a > 0, elements stored as exact (a, b)."""

    kind = "affine"

    def __init__(self, R: float = 1.0):
        self.R = float(R)
        # open-ball test (a - 1)^2 + b^2 < 2 a (cosh R - 1), exact in rationals
        self._bound = Fraction(math.cosh(self.R)) - 1

    def identity(self):
        return (Fraction(1), Fraction(0))

    def element(self, a, b):
        a, b = Fraction(a), Fraction(b)
        if a <= 0:
            raise InputError("affine ambient needs a > 0")
        return (a, b)

    def mul(self, g, h):
        return (g[0] * h[0], g[0] * h[1] + g[1])

    def inv(self, g):
        return (1 / g[0], -g[1] / g[0])

    def gauge(self, g) -> float:
        a, b = float(g[0]), float(g[1])
        return math.acosh(1 + ((a - 1) ** 2 + b * b) / (2 * a))

    def inside(self, g) -> bool:
        a, b = g
        return (a - 1) ** 2 + b * b < 2 * a * self._bound

    def distance(self, g, h) -> float:
        return self.gauge(self.mul(self.inv(g), h))

    def key(self, g):
        return g

    def describe(self) -> dict:
        return {"kind": self.kind, "R": self.R,
                "metric": "hyperbolic distance between a*i+b and a'*i+b' in the upper half-plane"}


class MatrixGroup:
    """Float matrices; d(g, h) = ||log(g^-1 h)||_F when ||g^-1 h - I|| < 1."""

    kind = "matrix"

    def __init__(self, n: int, R: float = 0.5, tolerance: float = 1e-9):
        self.n = n
        self.R = float(R)
        self.tolerance = tolerance

    def identity(self):
        return np.eye(self.n)

    def element(self, rows):
        g = np.array(rows, dtype=float)
        if g.shape != (self.n, self.n):
            raise InputError(f"need an {self.n}x{self.n} matrix")
        return g

    def mul(self, g, h):
        return g @ h

    def inv(self, g):
        return np.linalg.inv(g)

    def gauge(self, g) -> float:
        if np.linalg.norm(g - np.eye(self.n), 2) >= 1:
            return math.inf
        return float(np.linalg.norm(np.real(logm(g)), "fro"))

    def inside(self, g) -> bool:
        return self.gauge(g) < self.R

    def distance(self, g, h) -> float:
        return self.gauge(self.mul(self.inv(g), h))

    def key(self, g):
        return tuple(np.round(np.asarray(g) / self.tolerance).astype(np.int64).ravel().tolist())

    def describe(self) -> dict:
        return {"kind": self.kind, "n": self.n, "R": self.R, "dedup_tolerance": self.tolerance,
                "metric": "Frobenius norm of the principal logarithm of g^-1 h"}


def symmetrize(S: Iterable, ambient) -> list:
    out, seen = [], set()
    for s in S:
        for t in (s, ambient.inv(s)):
            k = ambient.key(t)
            if k not in seen:
                seen.add(k)
                out.append(t)
    return out


# balls and tables

def _layers(S, ambient, n: int, cap: int):
    S = symmetrize(S, ambient)
    for i, s in enumerate(S):
        if not ambient.inside(s):
            raise InputError(f"generator {i} lies outside B_R and can never be a first letter")
    e = ambient.identity()
    seen = {ambient.key(e): e}
    frontier = [e]
    yield dict(seen)
    for _ in range(n):
        nxt = []
        for x in frontier:
            for s in S:
                y = ambient.mul(x, s)
                k = ambient.key(y)
                if k in seen or not ambient.inside(y):
                    continue
                seen[k] = y
                nxt.append(y)
        if len(nxt) > cap:
            raise StateExplosion(f"frontier of {len(nxt)} elements exceeds cap {cap}")
        frontier = nxt
        yield seen


def local_ball(S, ambient, n: int, config: Config = DEFAULT) -> list:
    """B_R(n) as a list of elements (first-reached order)."""
    ball = None
    for ball in _layers(S, ambient, n, config.frontier_cap):
        pass
    return list(ball.values())


@dataclass
class GrowthTable:
    S: list
    R: float
    values: list
    dedup_tolerance: float
    ambient: dict

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def to_json(self) -> dict:
        return {"R": self.R, "values": list(self.values), "dedup_tolerance": self.dedup_tolerance,
                "ambient": self.ambient}


def growth_table(S, ambient, N: int, config: Config = DEFAULT, stop_at: int | None = None) -> GrowthTable:
    """f(0..N); with stop_at the table ends at the first n where f(n) >= stop_at."""
    values = []
    for ball in _layers(S, ambient, N, config.frontier_cap):
        values.append(len(ball))
        if stop_at is not None and values[-1] >= stop_at:
            break
    tol = getattr(ambient, "tolerance", 0.0)
    return GrowthTable(list(S), ambient.R, values, tol, ambient.describe())


@dataclass
class GrowthClassification:
    verdict: str  # Bounded, Polynomial, Exponential or Inconclusive
    degree: float | None = None
    rate: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "degree": self.degree, "rate": self.rate, "diagnostics": self.diagnostics}


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return float(slope), r2


def classify(table: GrowthTable, config: Config = DEFAULT) -> GrowthClassification:
    f = np.asarray(table.values, dtype=float)
    N = len(f) - 1
    if N < 12:
        raise InsufficientData(f"need N >= 12, got {N}")
    tail = f[N - max(1, int(round(N * config.bounded_fraction))):]
    if np.all(tail == tail[0]):
        return GrowthClassification("Bounded", diagnostics={"stable_value": int(tail[0]), "window": len(tail)})
    start = max(1, N - int(round(N * config.fit_fraction)))
    n = np.arange(start, N + 1, dtype=float)
    logf = np.log(f[start:])
    slope_e, r2_e = _fit(n, logf)
    slope_p, r2_p = _fit(np.log(n), logf)
    diag = {"window": [int(start), int(N)], "exp_slope": slope_e, "exp_r2": r2_e,
            "poly_degree": slope_p, "poly_r2": r2_p,
            "thresholds": {"r2": config.r2_threshold, "slope": config.slope_threshold}}
    if r2_e >= r2_p and r2_e >= config.r2_threshold and slope_e > config.slope_threshold:
        return GrowthClassification("Exponential", rate=math.exp(slope_e), diagnostics=diag)
    if r2_p > r2_e and r2_p >= config.r2_threshold:
        return GrowthClassification("Polynomial", degree=slope_p, diagnostics=diag)
    return GrowthClassification("Inconclusive", diagnostics=diag)


# nets and the covering certificate

def _hyperbolic_cosh_distance(za: tuple[float, float], zb: tuple[float, float]) -> float:
    (xa, ya), (xb, yb) = za, zb
    return 1 + ((xa - xb) ** 2 + (ya - yb) ** 2) / (2 * ya * yb)


def _point(g) -> tuple[float, float]:
    return float(g[1]), float(g[0])


def hyperbolic_grid(R: float, step: float) -> list[tuple[float, float]]:
    """Points (b, a) covering the closed ball of radius R within distance step.

    Rows are spaced `step` apart in log a, and x-steps in a row at height a
    are step * a, so any point lies within step/2 + step/2 of a grid point.
    """
    ch = math.cosh(R + step)
    out = []
    k_max = int(math.ceil((R + step) / step))
    for k in range(-k_max, k_max + 1):
        u = k * step
        a = math.exp(u)
        half = 2 * a * (ch - 1) - (a - 1) ** 2
        if half < 0:
            continue
        half = math.sqrt(half)
        hx = step * a
        j_max = int(math.ceil(half / hx))
        out.extend((j * hx, a) for j in range(-j_max, j_max + 1))
    return out


def discrete_net(ambient, spacing: float, resolution: float | None = None, candidates=None) -> list:
    """Greedy maximal spacing-discrete subset of the closed ball of radius R.

    Candidates are scanned in sorted order; by default they form a reference
    net of the ball at the given resolution.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    R = ambient.R
    if resolution is None:
        resolution = min(spacing / 4, R / 50)
    if spacing < resolution:
        warnings.warn(f"spacing {spacing} is below the net resolution {resolution}; capped", stacklevel=2)
        spacing = resolution
    if candidates is None:
        if isinstance(ambient, Translations):
            step = Fraction(resolution).limit_denominator(10 ** 6)
            b0 = Fraction(ambient.basis[0]).limit_denominator(10 ** 9)
            k_max = int(Fraction(R).limit_denominator(10 ** 6) / step)
            zeros = (Fraction(0),) * (len(ambient.basis) - 1)
            candidates = [(k * step / b0,) + zeros for k in range(-k_max, k_max + 1)]
        elif isinstance(ambient, AffineLine):
            candidates = [(Fraction(a).limit_denominator(10 ** 6), Fraction(b).limit_denominator(10 ** 6))
                          for b, a in hyperbolic_grid(R, resolution)]
        else:
            raise InputError(f"no reference net for ambient {ambient.kind}")
        candidates = sorted(candidates)
    ball = [c for c in candidates if _closed_inside(ambient, c)]
    chosen: list = []
    for c in ball:
        if all(ambient.distance(c, d) >= spacing for d in chosen):
            chosen.append(c)
    return chosen


def _closed_inside(ambient, g) -> bool:
    return ambient.gauge(g) <= ambient.R


@dataclass
class AmmelCertificate:
    sigma: list
    R: float
    net_step: float
    net_points: int
    min_cover_count: int
    freeness: object
    ambient: dict

    def to_json(self) -> dict:
        out = {"kind": "local_growth_cover", "schema_version": SCHEMA_VERSION, "R": self.R,
               "net_step": self.net_step, "net_points": self.net_points,
               "min_cover_count": self.min_cover_count, "ambient": self.ambient,
               "sigma": [[str(x) for x in s] for s in self.sigma],
               "implies": "f_{R,S}(n) >= 2^n for all n"}
        if hasattr(self.freeness, "to_json"):
            out["freeness"] = self.freeness.to_json()
        return out


def ammel_certificate(sigma: Sequence, ambient, freeness=None, net_step: float = 0.03) -> AmmelCertificate:
    """Check that the closed ball is covered twice by the discs s^-1 B_{R/2}.

    Each net point w must lie within R/2 - net_step of two centers s^-1, so
    every point within net_step of w (in particular all of the closed ball)
    is covered twice.  `freeness` must be a semigroup certificate for sigma.
    """
    if isinstance(ambient, Translations):
        raise MissingFreenessPrerequisite("translations commute, so no two of them generate a free semigroup")
    if not isinstance(ambient, AffineLine):
        raise InputError("the covering check is implemented for the affine ambient")
    sigma = [ambient.element(*s) for s in sigma]
    if freeness is None:
        raise MissingFreenessPrerequisite("a free-semigroup certificate for sigma is required")
    certified = {(Fraction(g.a), Fraction(g.b)) for g in freeness.elements}
    if certified != set(sigma):
        raise MissingFreenessPrerequisite("the freeness certificate is for a different set")
    if len(set(sigma)) != len(sigma):
        raise InputError("sigma elements must be pairwise distinct")
    for i, s in enumerate(sigma):
        if not ambient.inside(s):
            raise InputError(f"sigma element {i} lies outside B_R")
    R = ambient.R
    half = math.cosh(R / 2 - net_step)
    centers = [_point(ambient.inv(s)) for s in sigma]
    grid = hyperbolic_grid(R, net_step)
    worst = len(sigma)
    for w in grid:
        count = 0
        for c in centers:
            if _hyperbolic_cosh_distance(c, w) < half:
                count += 1
                if count >= 2:
                    break
        if count < 2:
            raise CoverGap({"b": w[0], "a": w[1]}, count)
        worst = min(worst, count)
    return AmmelCertificate(sigma, R, net_step, len(grid), worst, freeness, ambient.describe())


def semigroup_layers(sigma: Sequence, ambient, n_max: int, cap: int = 4096) -> list[int]:
    """Sizes of S(n) intersected with B_R(n), built by left multiplication.

    Each layer is truncated to `cap` elements before extending, so the counts
    are lower bounds for the true sizes.
    """
    layer = [ambient.identity()]
    sizes = [1]
    for _ in range(n_max):
        seen: dict = {}
        for w in layer:
            for s in sigma:
                y = ambient.mul(s, w)
                if ambient.inside(y):
                    seen.setdefault(ambient.key(y), y)
            if len(seen) >= cap:
                break
        layer = list(seen.values())[:cap]
        sizes.append(len(layer))
    return sizes


def ammel_fixture(R: float = 1.0, p: int = 101, spacing: float = 0.38, net_step: float = 0.03,
                  candidate_step: float = 0.05):
    """Two interleaved greedy nets of rational centers, inverted into sigma.

    Centers are (a, b) = (n/p, m/p) with p not dividing n; then s = c^-1 has
    a = p/n, which is p-adically contracting, and the fixed point -m/(n - p)
    reduces to -m/n mod p.  Centers whose residue is already used are skipped,
    so the p-adic fixed points are pairwise at distance 1 and the contracted
    discs are disjoint.
    """
    from .affine import AffineElement, certify_free_semigroup
    from .field import FieldDescriptor

    amb = AffineLine(R)
    cands = []
    for b, a in hyperbolic_grid(R, candidate_step):
        n = max(1, round(a * p))
        if n % p == 0:
            n += 1
        cands.append((Fraction(n, p), Fraction(round(b * p), p)))
    cands = sorted(set(c for c in cands if amb.inside(c)))
    used_res: set = set()
    nets = []
    taken: set = set()
    for _ in range(2):
        net = []
        for c in cands:
            if c in taken:
                continue
            n, m = int(c[0] * p), int(c[1] * p)
            res = (-m * pow(n, -1, p)) % p
            if res in used_res:
                continue
            if all(amb.distance(c, d) >= spacing for d in net):
                net.append(c)
                taken.add(c)
                used_res.add(res)
        nets.append(net)
    centers = nets[0] + nets[1]
    if len(centers) > p:
        raise InputError("more centers than residues; raise p")
    sigma = [amb.inv(c) for c in centers]
    Qp = FieldDescriptor.padic(p, 20)
    cert = certify_free_semigroup([AffineElement(a, b, Qp) for a, b in sigma])
    return amb, sigma, cert
