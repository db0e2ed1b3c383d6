"""Contraction and proximality of single projective transformations.

If g = k a k' is a Cartan decomposition with |a_1/a_2| >= 1/eps^2, then [g]
maps everything at distance >= eps from the repelling hyperplane
H_g = ker((k' row 0)) into the eps-ball around the attracting point
v_g = [k e_1], and it is (eps/r)^2-Lipschitz outside the r-neighbourhood of
H_g.  When v_g is far enough from H_g (r >= c1 * eps) the map has a genuine
attracting fixed point and a repelling fixed hyperplane near (v_g, H_g);
these are found by iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import DEFAULT, Config, DynamicsConstants
from .errors import NoConvergence, NotContracting, NotProximal, RegimeViolation, VerificationFailed
from .field import FieldDescriptor
from .linalg import Matrix, cartan, singular_ratio
from .projective import (ProjectiveHyperplane, ProjectivePoint, act, distance, distance_to_hyperplane,
                         hausdorff_distance, pull_hyperplane, sample_padic_vectors, sample_sphere)


@dataclass(frozen=True, eq=False)
class ContractionData:
    epsilon: float
    v_g: ProjectivePoint
    H_g: ProjectiveHyperplane
    ratio: float

    def lipschitz_outside(self, r: float) -> float:
        return self.epsilon ** 2 / r ** 2


def _epsilon_from_ratio(ratio, field: FieldDescriptor) -> float:
    if field.kind == "padic":
        # ratio = p**k exactly
        k = round(math.log(ratio, field.p))
        return float(field.p) ** (-k / 2)
    return 1.0 / math.sqrt(ratio)


def contraction_data(g: Matrix) -> ContractionData:
    cd = cartan(g)
    ratio = singular_ratio(g, cd)
    if ratio <= 1:
        raise NotContracting(f"singular ratio {ratio} is 1 within margin")
    eps = _epsilon_from_ratio(ratio, g.field)
    v_g = ProjectivePoint.from_vector(list(cd.k1.data[:, 0]), g.field)
    H_g = ProjectiveHyperplane.from_functional(list(cd.k2.data[0, :]), g.field)
    return ContractionData(eps, v_g, H_g, ratio)


@dataclass
class VerificationReport:
    passed: bool
    epsilon: float
    samples: int
    outside: int
    max_image_distance: float
    lipschitz: dict = field(default_factory=dict)
    lipschitz_pairs: dict = field(default_factory=dict)

    def lipschitz_ok(self, epsilon: float | None = None, rel: float = 1e-6) -> bool:
        eps = self.epsilon if epsilon is None else epsilon
        return all(q <= (eps ** 2 / r ** 2) * (1 + rel) for r, q in self.lipschitz.items())


def _batch_point_dist(Y: np.ndarray, v: np.ndarray) -> np.ndarray:
    """d([y], [v]) for unit rows y and unit v."""
    n = Y.shape[1]
    acc = np.zeros(Y.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            acc += np.abs(Y[:, i] * v[j] - Y[:, j] * v[i]) ** 2
    return np.sqrt(acc)


def _batch_pair_dist(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    n = X.shape[1]
    acc = np.zeros(X.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            acc += np.abs(X[:, i] * Y[:, j] - X[:, j] * Y[:, i]) ** 2
    return np.sqrt(acc)


def _unit_rows(Z: np.ndarray) -> np.ndarray:
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def _shell(rng, f: np.ndarray, count: int, lo: float, hi: float, complex_: bool) -> np.ndarray:
    """Unit vectors x with |f(x)| uniform in [lo, hi]."""
    n = len(f)
    u = np.conj(f) / np.linalg.norm(f)
    W = sample_sphere(rng, n, count, complex_)
    W = W - np.outer(W @ np.conj(u), u)
    W = _unit_rows(W)
    t = rng.uniform(lo, hi, count)
    if complex_:
        t = t * np.exp(2j * np.pi * rng.uniform(size=count))
    return t[:, None] * u[None, :] + np.sqrt(1 - np.abs(t) ** 2)[:, None] * W


def verify_contraction(g: Matrix, data: ContractionData, samples: int = 10_000, seed: int = 0,
                       r_grid=(0.1, 0.3, 0.5), raise_on_failure: bool = True) -> VerificationReport:
    """Sample the contraction guarantee and the Lipschitz bound."""
    if g.is_padic:
        return _verify_padic(g, data, samples, seed, r_grid, raise_on_failure)
    rng = np.random.default_rng(seed)
    complex_ = g.field.kind == "complex"
    n = g.n
    f = data.H_g.functional
    v = data.v_g.vec
    G = g.scaled().data
    eps = data.epsilon
    margin = g.field.margin
    half = samples // 2
    X = np.vstack([sample_sphere(rng, n, samples - half, complex_),
                   _shell(rng, f, half, eps, min(1.0, 4 * eps), complex_)])
    dH = np.abs(X @ f)
    X = X[dH >= eps]
    Y = _unit_rows(X @ G.T)
    dist = _batch_point_dist(Y, v)
    worst = float(dist.max()) if len(dist) else 0.0
    report = VerificationReport(True, eps, samples, len(X), worst)
    bad = np.nonzero(dist > eps + margin)[0]
    if len(bad):
        report.passed = False
        if raise_on_failure:
            k = bad[np.argmax(dist[bad])]
            raise VerificationFailed(f"image at distance {dist[k]:.6g} > epsilon {eps:.6g}", witness=X[k])
    for r in r_grid:
        m = max(samples // 4, 200)
        P = np.vstack([sample_sphere(rng, n, m, complex_), _shell(rng, f, m, r, min(1.0, r + 0.2), complex_)])
        P = P[np.abs(P @ f) >= r]
        # nearby partners probe the local derivative, shuffled partners the global quotient
        Z = _unit_rows(P + 1e-4 * sample_sphere(rng, n, len(P), complex_))
        Q = P[rng.permutation(len(P))]
        A = np.vstack([P, P])
        B = np.vstack([Z, Q])
        keep = (np.abs(B @ f) >= r)
        A, B = A[keep], B[keep]
        dxy = _batch_pair_dist(A, B)
        ok = dxy >= 1e-6
        A, B, dxy = A[ok], B[ok], dxy[ok]
        GA, GB = _unit_rows(A @ G.T), _unit_rows(B @ G.T)
        quot = _batch_pair_dist(GA, GB) / dxy
        report.lipschitz[r] = float(quot.max()) if len(quot) else 0.0
        report.lipschitz_pairs[r] = int(len(quot))
    return report


def _verify_padic(g, data, samples, seed, r_grid, raise_on_failure) -> VerificationReport:
    rng = np.random.default_rng(seed)
    eps = data.epsilon
    pts = [ProjectivePoint.from_vector(x, g.field) for x in sample_padic_vectors(rng, g.field, g.n, samples)]
    outside = [x for x in pts if distance_to_hyperplane(x, data.H_g) >= eps]
    worst = Fraction(0)
    report = VerificationReport(True, eps, samples, len(outside), 0.0)
    for x in outside:
        d = distance(act(g, x), data.v_g)
        worst = max(worst, d)
        if d > eps:
            report.passed = False
            if raise_on_failure:
                raise VerificationFailed(f"image at distance {float(d)} > epsilon {eps}", witness=x)
    report.max_image_distance = float(worst)
    for r in r_grid:
        good = [x for x in pts if distance_to_hyperplane(x, data.H_g) >= r]
        best = 0.0
        count = 0
        for x, y in zip(good[::2], good[1::2]):
            dxy = distance(x, y)
            if dxy == 0:
                continue
            best = max(best, float(distance(act(g, x), act(g, y)) / dxy))
            count += 1
        report.lipschitz[r] = best
        report.lipschitz_pairs[r] = count
    return report


@dataclass(frozen=True, eq=False)
class ProximalityCertificate:
    matrix: Matrix
    r: float
    epsilon: float
    v_bar: ProjectivePoint
    H_bar: ProjectiveHyperplane
    fixed_point_residual: float
    hyperplane_residual: float
    constants: DynamicsConstants
    v_g: ProjectivePoint
    H_g: ProjectiveHyperplane
    iterations: int = 0
    power: int = 1

    @property
    def field(self) -> FieldDescriptor:
        return self.matrix.field

    def contraction(self) -> ContractionData:
        """The certificate read as contraction data around (v_bar, H_bar)."""
        return ContractionData(self.epsilon, self.v_bar, self.H_bar, 1 / self.epsilon ** 2)

    def to_json(self) -> dict:
        return {
            "kind": "proximal",
            "power": self.power,
            "matrix": self.matrix.to_json(),
            "r": float(self.r),
            "epsilon": float(self.epsilon),
            "v_bar": self.v_bar.to_json(),
            "H_bar": self.H_bar.to_json(),
            "v_g": self.v_g.to_json(),
            "H_g": self.H_g.to_json(),
            "constants": self.constants.as_dict(),
            "residuals": {"fixed_point": float(self.fixed_point_residual),
                          "hyperplane": float(self.hyperplane_residual),
                          "iterations": self.iterations},
        }

    @classmethod
    def from_json(cls, obj: dict, eta: float = 1e-9) -> "ProximalityCertificate":
        res = obj.get("residuals", {})
        return cls(Matrix.from_json(obj["matrix"], eta), float(obj["r"]), float(obj["epsilon"]),
                   ProjectivePoint.from_json(obj["v_bar"], eta), ProjectiveHyperplane.from_json(obj["H_bar"], eta),
                   float(res.get("fixed_point", 0.0)), float(res.get("hyperplane", 0.0)),
                   DynamicsConstants(**obj["constants"]),
                   ProjectivePoint.from_json(obj["v_g"], eta), ProjectiveHyperplane.from_json(obj["H_g"], eta),
                   int(res.get("iterations", 0)), int(obj.get("power", 1)))


def _tolerance(field: FieldDescriptor, config: Config) -> float:
    if field.kind == "padic":
        return float(Fraction(1, field.p ** max(field.precision - 2, 1)))
    return config.tolerance()


def _iterate(step, start, dist, tol, budget):
    x = start
    for it in range(1, budget + 1):
        y = step(x)
        if dist(x, y) <= tol:
            return y, it
        x = y
    raise NoConvergence(f"no convergence after {budget} iterations")


def proximality(g: Matrix, config: Config = DEFAULT, data: ContractionData | None = None) -> ProximalityCertificate:
    data = data or contraction_data(g)
    const = config.constants(g.field)
    eps = data.epsilon
    r0 = float(distance_to_hyperplane(data.v_g, data.H_g))
    margin = g.field.margin
    if r0 - margin < const.c1 * eps:
        raise NotProximal(f"r0 = {r0:.6g} < c1*eps = {const.c1 * eps:.6g}")
    gs = g.scaled()
    tol = _tolerance(g.field, config)
    budget = config.fixed_point_budget
    v_bar, it1 = _iterate(lambda x: act(gs, x), data.v_g, distance, tol, budget)
    H_bar, it2 = _iterate(lambda H: pull_hyperplane(gs, H), data.H_g, hausdorff_distance, tol, budget)
    fp_res = float(distance(act(gs, v_bar), v_bar))
    hp_res = float(hausdorff_distance(pull_hyperplane(gs, H_bar), H_bar))
    cert = ProximalityCertificate(g, r0, eps, v_bar, H_bar, fp_res, hp_res, const, data.v_g, data.H_g, max(it1, it2))
    if float(distance(v_bar, data.v_g)) > eps + margin + tol:
        raise NoConvergence("fixed point left the eps-ball around the attracting point")
    if float(distance_to_hyperplane(v_bar, H_bar)) < r0 - 2 * eps - margin - tol:
        raise NoConvergence("fixed point too close to the fixed hyperplane")
    return cert


def power_proximality(cert: ProximalityCertificate, n: int, config: Config | None = None) -> ProximalityCertificate:
    """Certificate for g**n with parameters (r - 2 eps, (c2 eps)**(n/3))."""
    if n < 1:
        raise ValueError("n must be positive")
    c = cert.constants
    eps = cert.epsilon
    if cert.r < c.c1 * eps ** (2 / 3):
        raise RegimeViolation(f"r = {cert.r:.6g} < c1*eps^(2/3) = {c.c1 * eps ** (2 / 3):.6g}")
    gn = cert.matrix.power(n).scaled()
    fp_res = float(distance(act(gn, cert.v_bar), cert.v_bar))
    hp_res = float(hausdorff_distance(pull_hyperplane(gn, cert.H_bar), cert.H_bar))
    return ProximalityCertificate(gn, cert.r - 2 * eps, (c.c2 * eps) ** (n / 3), cert.v_bar, cert.H_bar,
                                  fp_res, hp_res, c, cert.v_g, cert.H_g, cert.iterations, cert.power * n)


@dataclass(frozen=True, eq=False)
class VeryProximal:
    forward: ProximalityCertificate
    backward: ProximalityCertificate

    @property
    def r(self) -> float:
        return min(self.forward.r, self.backward.r)

    @property
    def epsilon(self) -> float:
        return max(self.forward.epsilon, self.backward.epsilon)

    def to_json(self) -> dict:
        return {"kind": "very_proximal", "r": self.r, "epsilon": self.epsilon,
                "forward": self.forward.to_json(), "backward": self.backward.to_json()}

    @classmethod
    def from_json(cls, obj: dict, eta: float = 1e-9) -> "VeryProximal":
        return cls(ProximalityCertificate.from_json(obj["forward"], eta),
                   ProximalityCertificate.from_json(obj["backward"], eta))


def very_proximal(g: Matrix, config: Config = DEFAULT) -> VeryProximal:
    out = []
    for direction, h in (("forward", g), ("backward", g.inverse())):
        try:
            out.append(proximality(h, config))
        except (NotProximal, NotContracting, NoConvergence) as exc:
            raise NotProximal(f"{direction}: {exc}", direction=direction) from exc
    return VeryProximal(*out)
