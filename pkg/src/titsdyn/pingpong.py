"""Ping-pong certificates and the searches that produce them.

A tuple (a_1, ..., a_m) is certified free when every a_i is (r, eps)-very
proximal with r > 2 eps and the attracting fixed points of a_i^{+-1} stay at
least r away from the repelling fixed hyperplanes of a_j^{+-1} for i != j.
Two further checks make the certificate self-evidently sound: the
attracting eps-balls of distinct indices are disjoint, and every attracting
point of the contraction data sits more than 2 eps from every repelling
hyperplane it will be fed into.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .config import DEFAULT, Config, DynamicsConstants
from .dynamics import ProximalityCertificate, VeryProximal, contraction_data, very_proximal
from .errors import (BudgetExceeded, GapViolation, NoConvergence, NotContracting, NotProximal,
                     NotVeryProximal, NoWitness, PreconditionViolated, SearchFailed)
from .field import FieldDescriptor
from .linalg import Matrix, exact_identity, exact_inverse, exact_matmul
from .projective import (ProjectiveHyperplane, ProjectivePoint, distance, distance_to_hyperplane,
                         sample_sphere)
from .words import Word, evaluate_layers, format_word, free_reduce, inverse_word, reduced_words

SCHEMA_VERSION = 1


def _labels(m: int) -> list[tuple[int, int]]:
    return [(i, s) for i in range(m) for s in (1, -1)]


def _cert(vp: VeryProximal, s: int) -> ProximalityCertificate:
    return vp.forward if s == 1 else vp.backward


@dataclass(frozen=True, eq=False)
class PingPongCertificate:
    elements: tuple
    certs: tuple
    r: float
    epsilon: float
    cross_gap: np.ndarray
    attractor_separation: float
    contraction_gap: float
    constants: DynamicsConstants
    words: tuple | None = None
    notes: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return len(self.elements)

    @property
    def field(self) -> FieldDescriptor:
        return self.elements[0].field

    def to_json(self) -> dict:
        out = {
            "kind": "pingpong",
            "schema_version": SCHEMA_VERSION,
            "field": self.field.to_json(),
            "m": self.m,
            "r": float(self.r),
            "epsilon": float(self.epsilon),
            "cross_gap": [[float(x) for x in row] for row in self.cross_gap],
            "attractor_separation": float(self.attractor_separation),
            "contraction_gap": float(self.contraction_gap),
            "constants": self.constants.as_dict(),
            "elements": [g.to_json() for g in self.elements],
            "certs": [vp.to_json() for vp in self.certs],
        }
        if self.words is not None:
            out["words"] = [{k: format_word(v) if isinstance(v, tuple) else v for k, v in w.items()}
                            for w in self.words]
        if self.notes:
            out["notes"] = self.notes
        return out


def check_pingpong(elements: Sequence[Matrix], config: Config = DEFAULT,
                   certs: Sequence[VeryProximal] | None = None) -> PingPongCertificate:
    elements = tuple(elements)
    m = len(elements)
    if m < 1:
        raise ValueError("need at least one element")
    if certs is None:
        certs = []
        for i, g in enumerate(elements):
            try:
                certs.append(very_proximal(g, config))
            except NotProximal as exc:
                raise NotVeryProximal(i, exc.direction, str(exc)) from exc
    certs = tuple(certs)
    margin = elements[0].field.margin
    eps = max(vp.epsilon for vp in certs)
    r_prox = min(vp.r for vp in certs)
    if not eps < 0.25:
        raise GapViolation(0, 0, (1, 1), eps, 0.25, reason="epsilon must stay below 1/4")
    labels = _labels(m)
    L = len(labels)
    cross = np.zeros((L, L))
    for a, (i, s) in enumerate(labels):
        for b, (j, t) in enumerate(labels):
            cross[a, b] = float(distance_to_hyperplane(_cert(certs[i], s).v_bar, _cert(certs[j], t).H_bar))
    off = [(a, b) for a in range(L) for b in range(L) if labels[a][0] != labels[b][0]]
    r = r_prox
    if off:
        r = min(r, min(cross[a, b] for a, b in off))
    need = 2 * eps + margin
    if not r > need:
        if off:
            a, b = min(off, key=lambda ab: cross[ab])
            if cross[a, b] <= need:
                (i, s), (j, t) = labels[a], labels[b]
                raise GapViolation(i, j, (s, t), cross[a, b], need)
        raise GapViolation(0, 0, (1, 1), r_prox, need, reason="proximality radius")
    # attracting balls of distinct indices must be disjoint
    sep = 1.0
    for a, b in off:
        (i, s), (j, t) = labels[a], labels[b]
        d = float(distance(_cert(certs[i], s).v_bar, _cert(certs[j], t).v_bar))
        sep = min(sep, d)
        if not d > need:
            raise GapViolation(i, j, (s, t), d, need, reason="attracting balls overlap")
    # contraction domains: letter (i,s) followed by any letter other than (i,-s)
    cgap = 1.0
    for (i, s), (j, t) in itertools.product(labels, labels):
        if (j, t) == (i, -s):
            continue
        d = float(distance_to_hyperplane(_cert(certs[i], s).v_g, _cert(certs[j], t).H_g))
        cgap = min(cgap, d)
        if not d > need:
            raise GapViolation(i, j, (s, t), d, need, reason="contraction domains")
    return PingPongCertificate(elements, certs, r, eps, cross, sep, cgap, certs[0].forward.constants)


def certificate_from_json(obj: dict, config: Config = DEFAULT) -> PingPongCertificate:
    eta = config.eta
    elements = [Matrix.from_json(g, eta) for g in obj["elements"]]
    certs = [VeryProximal.from_json(c, eta) for c in obj["certs"]]
    return PingPongCertificate(tuple(elements), tuple(certs), float(obj["r"]), float(obj["epsilon"]),
                               np.array(obj["cross_gap"], dtype=float), float(obj["attractor_separation"]),
                               float(obj["contraction_gap"]), DynamicsConstants(**obj["constants"]))


@dataclass
class RecheckReport:
    passed: bool
    problems: list

    def to_json(self) -> dict:
        return {"passed": self.passed, "problems": self.problems}


def recheck_pingpong(obj: dict, config: Config = DEFAULT, rel_tol: float = 1e-6) -> RecheckReport:
    """Recompute every inequality of a serialized certificate."""
    problems = []
    const = DynamicsConstants(**obj["constants"])
    field_desc = FieldDescriptor.from_json(obj["field"], config.eta)
    if field_desc.kind == "padic":
        cfg = replace(config, padic=const)
    else:
        cfg = config.with_constants(const.c1, const.c2, const.C)
    stored = certificate_from_json(obj, cfg)
    # 1. the serialized geometry on its own
    eps, r = stored.epsilon, stored.r
    if not eps < 0.25 or not r > 2 * eps:
        problems.append(f"stored r={r}, epsilon={eps} violate r > 2 eps < 1/2")
    labels = _labels(stored.m)
    for a, (i, s) in enumerate(labels):
        for b, (j, t) in enumerate(labels):
            d = float(distance_to_hyperplane(_cert(stored.certs[i], s).v_bar, _cert(stored.certs[j], t).H_bar))
            if i != j and d < r * (1 - rel_tol):
                problems.append(f"serialized gap ({i},{s})->({j},{t}) = {d} < r = {r}")
    for vp in stored.certs:
        for c in (vp.forward, vp.backward):
            if c.epsilon > eps * (1 + rel_tol) or c.r < r * (1 - rel_tol):
                problems.append("per-element parameters weaker than the common ones")
    # 2. recompute from the matrices alone
    try:
        fresh = check_pingpong(stored.elements, cfg)
    except Exception as exc:  # noqa: BLE001 - any failure is a recheck failure
        problems.append(f"recomputation refused: {type(exc).__name__}: {exc}")
        return RecheckReport(False, problems)
    for name in ("r", "epsilon", "attractor_separation", "contraction_gap"):
        a, b = getattr(stored, name), getattr(fresh, name)
        if abs(a - b) > rel_tol * max(1.0, abs(a)):
            problems.append(f"{name}: stored {a} vs recomputed {b}")
    if np.max(np.abs(stored.cross_gap - fresh.cross_gap)) > rel_tol:
        problems.append("cross-gap matrix differs from recomputation")
    return RecheckReport(not problems, problems)


# word oracle

@dataclass
class OracleResult:
    free: bool
    relation: Word | None
    words_checked: int

    def __bool__(self) -> bool:
        return self.free

    def describe(self) -> str:
        return "no relation" if self.free else f"relation {format_word(self.relation)}"


def _exact_rows(g) -> tuple:
    if isinstance(g, Matrix):
        if g.exact is None:
            raise ValueError("oracle needs exact-rational matrices")
        return g.exact
    return tuple(tuple(Fraction(x) for x in row) for row in g)


def freeness_oracle(elements: Sequence, max_len: int, budget: int | None = None,
                    method: str = "meet") -> OracleResult:
    """Search exactly for a reduced word of length <= max_len equal to the identity.

    "meet" enumerates words up to half the length and looks for coincidences
    x = y, which give the relation x y^-1; "bfs" evaluates every word.
    """
    mats = [_exact_rows(g) for g in elements]
    m = len(mats)
    budget = budget or DEFAULT.oracle_budget
    if m == 0:
        return OracleResult(True, None, 0)
    n = len(mats[0])
    ident = exact_identity(n)
    invs = [exact_inverse(g) for g in mats]
    if method == "bfs":
        total = sum(2 * m * (2 * m - 1) ** (k - 1) for k in range(1, max_len + 1))
        if total > budget:
            raise BudgetExceeded(f"{total} words exceed budget {budget}")
        count = 0
        for w, val in evaluate_layers(m, max_len, mats, invs, exact_matmul, ident):
            count += 1
            if w and val == ident:
                return OracleResult(False, w, count)
        return OracleResult(True, None, count)
    half = (max_len + 1) // 2
    total = sum(2 * m * (2 * m - 1) ** (k - 1) for k in range(1, half + 1)) + 1
    if total > budget:
        raise BudgetExceeded(f"{total} words exceed budget {budget}")
    buckets: dict = {}
    count = 0
    for w, val in evaluate_layers(m, half, mats, invs, exact_matmul, ident):
        count += 1
        buckets.setdefault(val, []).append(w)
    best = None
    for ws in buckets.values():
        if len(ws) < 2:
            continue
        for x, y in itertools.combinations(ws, 2):
            rel = free_reduce(x + inverse_word(y))
            if 0 < len(rel) <= max_len:
                key = (len(rel), _shortlex_key(rel))
                if best is None or key < best[0]:
                    best = (key, rel)
    if best is None:
        return OracleResult(True, None, count)
    return OracleResult(False, best[1], count)


def _shortlex_key(w: Word) -> tuple:
    return tuple((abs(x), 0 if x > 0 else 1) for x in w)


# separating sets

@dataclass(frozen=True, eq=False)
class SeparatingSet:
    F: tuple
    words: tuple
    m: int
    r: float
    trace: tuple = ()
    restarts: int = 0

    def to_json(self) -> dict:
        return {"kind": "separating", "m": self.m, "r": self.r, "restarts": self.restarts,
                "words": [format_word(w) for w in self.words], "trace": list(self.trace),
                "F": [g.to_json() for g in self.F]}


def word_elements(generators: Sequence[Matrix], max_count: int, max_len: int = 12,
                  include_identity: bool = True) -> list[tuple[Word, Matrix]]:
    """Distinct group elements in shortlex order of their shortest word."""
    gens = list(generators)
    if not gens:
        return []
    n = gens[0].n
    field_desc = gens[0].field
    invs = [g.inverse() for g in gens]
    seen = set()
    out = []
    ident = Matrix.identity(n, field_desc) if all(g.exact is not None for g in gens) else \
        Matrix(field_desc, np.eye(n, dtype=gens[0].data.dtype))
    for w, val in evaluate_layers(len(gens), max_len, gens, invs, lambda a, b: a @ b, ident):
        if not w and not include_identity:
            continue
        key = _float_key(val)
        if key in seen:
            continue
        seen.add(key)
        out.append((w, val))
        if len(out) >= max_count:
            break
    return out


def _float_key(g: Matrix) -> tuple:
    if g.exact is not None:
        return g.exact
    d = g.data / np.max(np.abs(g.data))
    i = np.unravel_index(np.argmax(np.abs(d) > 1e-9), d.shape)
    d = d / (d[i] / abs(d[i]))
    return tuple(np.round(d, 8).ravel().tolist())


def _separation_objective(Fmats: np.ndarray, Finv: np.ndarray, n: int, k: int, complex_: bool):
    def unpack(x):
        if complex_:
            half = len(x) // 2
            x = x[:half] + 1j * x[half:]
        P = x[:k * n].reshape(k, n)
        H = x[k * n:].reshape(k, n)
        P = P / np.maximum(np.linalg.norm(P, axis=1, keepdims=True), 1e-300)
        H = H / np.maximum(np.linalg.norm(H, axis=1, keepdims=True), 1e-300)
        return P, H

    def value(x):
        P, H = unpack(x)
        # images: (|F|, k, n)
        best = 0.0
        for mats in (Fmats, Finv):
            Y = np.einsum("fij,kj->fki", mats, P)
            Y = Y / np.linalg.norm(Y, axis=2, keepdims=True)
            D = np.abs(np.einsum("fki,li->fkl", Y, H))
            mins = D.reshape(len(mats), -1).min(axis=1)
            yield_ = mins
            best = yield_ if isinstance(best, float) else np.minimum(best, yield_)
        return float(np.max(best))

    return value, unpack


def find_separating(generators: Sequence[Matrix], m: int, word_budget: int = 96, seed: int = 0,
                    restarts: int = 12, config: Config = DEFAULT, max_len: int = 8) -> SeparatingSet:
    """Finite F whose worst adversarial configuration still has separation r."""
    gens = list(generators)
    if not gens:
        raise SearchFailed("no generators")
    field_desc = gens[0].field
    if field_desc.kind == "padic":
        raise SearchFailed("adversarial separation search is implemented over R and C only")
    elems = word_elements(gens, word_budget, max_len)
    words = tuple(w for w, _ in elems)
    F = tuple(g for _, g in elems)
    n = gens[0].n
    complex_ = field_desc.kind == "complex"
    Fm = np.array([g.scaled().data for g in F])
    Fi = np.array([g.inverse().scaled().data for g in F])
    k = 2 * m
    value, _ = _separation_objective(Fm, Fi, n, k, complex_)
    rng = np.random.default_rng(seed)
    starts = []
    # structured starts: every point on a common eigenvector, hyperplanes through it
    for g in F[:5]:
        w, V = np.linalg.eig(g.data)
        wl, U = np.linalg.eig(g.data.T)
        for a in range(n):
            e = V[:, a] if complex_ else np.real(V[:, a])
            if np.linalg.norm(e) < 1e-12:
                continue
            e = e / np.linalg.norm(e)
            for b in range(n):
                h = U[:, b] if complex_ else np.real(U[:, b])
                if abs(np.dot(h, e)) > 1e-6 * np.linalg.norm(h):
                    continue
                P = np.tile(e, (k, 1))
                H = np.tile(h, (k, 1))
                starts.append(_pack(P, H, complex_))
    for _ in range(restarts):
        P = sample_sphere(rng, n, k, complex_)
        H = sample_sphere(rng, n, k, complex_)
        starts.append(_pack(P, H, complex_))
    trace = []
    best = math.inf
    for x0 in starts:
        v0 = value(x0)
        if v0 <= 0.0:
            trace.append(0.0)
            best = 0.0
            break
        res = minimize(value, x0, method="Nelder-Mead",
                       options={"maxfev": 3000, "xatol": 1e-7, "fatol": 1e-9})
        res = minimize(value, res.x, method="Powell", options={"maxfev": 3000, "xtol": 1e-6, "ftol": 1e-9})
        trace.append(float(min(res.fun, v0)))
        best = min(best, trace[-1])
    if not best >= config.separation_threshold:
        raise SearchFailed(f"adversary pushed the separation down to {best:.3g}")
    return SeparatingSet(F, words, m, float(best), tuple(trace), len(starts))


def _pack(P: np.ndarray, H: np.ndarray, complex_: bool) -> np.ndarray:
    x = np.concatenate([P.ravel(), H.ravel()])
    if complex_:
        return np.concatenate([x.real, x.imag])
    return np.real(x).astype(float)


# Cartan-style constructions

def _check_contracting(h: Matrix, bound: float) -> bool:
    try:
        return contraction_data(h).epsilon <= bound and contraction_data(h.inverse()).epsilon <= bound
    except NotContracting:
        return False


def make_very_contracting(g: Matrix, F: SeparatingSet, config: Config = DEFAULT,
                          return_index: bool = False):
    """g f g^-1 for the first f in F with both it and its inverse C*eps-contracting."""
    C = config.constants(g.field).C
    eps = contraction_data(g).epsilon
    if not eps < 1 / C:
        raise PreconditionViolated(f"epsilon {eps:.3g} must be below 1/C = {1 / C:.3g}")
    ginv = g.inverse()
    for idx, f in enumerate(F.F):
        h = g @ f @ ginv
        if _check_contracting(h, C * eps):
            return (h, idx) if return_index else h
    raise NoWitness(f"no element of F makes g f g^-1 {C * eps:.3g}-very contracting")


def _compatible(chosen: list[VeryProximal], cand: VeryProximal, margin: float) -> bool:
    vps = chosen + [cand]
    eps = max(v.epsilon for v in vps)
    need = 2 * eps + margin
    if not eps < 0.25 or not min(v.r for v in vps) > need:
        return False
    m = len(vps)
    j = m - 1
    for i in range(m - 1):
        for s, t in itertools.product((1, -1), repeat=2):
            for (a, sa), (b, sb) in (((i, s), (j, t)), ((j, t), (i, s))):
                ca, cb = _cert(vps[a], sa), _cert(vps[b], sb)
                if not float(distance_to_hyperplane(ca.v_bar, cb.H_bar)) > need:
                    return False
                if not float(distance(ca.v_bar, cb.v_bar)) > need:
                    return False
                if not float(distance_to_hyperplane(ca.v_g, cb.H_g)) > need:
                    return False
    for s, t in itertools.product((1, -1), repeat=2):
        if t == -s:
            continue
        if not float(distance_to_hyperplane(_cert(cand, s).v_g, _cert(cand, t).H_g)) > need:
            return False
    return True


def _backtrack(candidates: list, config: Config, budget: int):
    """candidates[i] is a lazy list of (meta, matrix); returns chosen (meta, matrix, vp) tuples."""
    evaluated: dict = {}
    counter = [0]

    def vp_of(i, k):
        key = (i, k)
        if key not in evaluated:
            counter[0] += 1
            if counter[0] > budget:
                raise BudgetExceeded("candidate budget exhausted")
            try:
                evaluated[key] = very_proximal(candidates[i][k][1], config)
            except (NotProximal, NotContracting, NoConvergence):
                evaluated[key] = None
        return evaluated[key]

    m = len(candidates)
    choice: list = []

    def rec(i) -> bool:
        if i == m:
            return True
        for k in range(len(candidates[i])):
            vp = vp_of(i, k)
            if vp is None:
                continue
            margin = candidates[i][k][1].field.margin
            if not _compatible([c[2] for c in choice], vp, margin):
                continue
            choice.append((candidates[i][k][0], candidates[i][k][1], vp))
            if rec(i + 1):
                return True
            choice.pop()
        return False

    ok = rec(0)
    return (choice if ok else None), counter[0]


def build_pingpong(targets: Sequence[Matrix], gamma: Matrix, F: SeparatingSet, config: Config = DEFAULT,
                   budget: int = 20_000) -> PingPongCertificate:
    """Find g_i, h_i in F so that (g_i gamma a_i h_i) is a ping-pong tuple."""
    C = config.constants(gamma.field).C
    try:
        eps_f = contraction_data(gamma).epsilon
        eps_b = contraction_data(gamma.inverse()).epsilon
    except NotContracting as exc:
        raise PreconditionViolated("gamma is not contracting") from exc
    if not max(eps_f, eps_b) < 1 / C:
        raise PreconditionViolated(f"gamma is only {max(eps_f, eps_b):.3g}-very contracting")
    cands = []
    for a in targets:
        row = []
        for gi, hi in itertools.product(range(len(F.F)), repeat=2):
            row.append(({"target": len(cands), "g": F.words[gi], "h": F.words[hi]},
                        F.F[gi] @ gamma @ a @ F.F[hi]))
        cands.append(row)
    try:
        choice, used = _backtrack(cands, config, budget)
    except BudgetExceeded as exc:
        raise NoWitness(str(exc)) from exc
    if choice is None:
        raise NoWitness(f"no combination of F x F worked ({used} candidates evaluated)")
    cert = check_pingpong([c[1] for c in choice], config, certs=[c[2] for c in choice])
    return _with_words(cert, [c[0] for c in choice], {"candidates_evaluated": used})


def _with_words(cert: PingPongCertificate, words, notes) -> PingPongCertificate:
    return PingPongCertificate(cert.elements, cert.certs, cert.r, cert.epsilon, cert.cross_gap,
                               cert.attractor_separation, cert.contraction_gap, cert.constants,
                               tuple(words), notes)


@dataclass(frozen=True, eq=False)
class NearPingPong:
    certificate: PingPongCertificate
    perturbations: tuple  # (w, w') per target
    perturbation_sizes: tuple  # operator-norm distances of w, w' from the identity
    exact_elements: tuple  # the x_i as exact rational matrices


def near_identity_words(generators: Sequence[Matrix], delta: float, max_len: int,
                        max_count: int = 64) -> list[tuple[Word, Matrix, float]]:
    """Generator words within operator-norm distance delta of the identity."""
    gens = list(generators)
    if not gens:
        return []
    n = gens[0].n
    ex = [g.exact for g in gens]
    invs = [exact_inverse(g) for g in ex]
    out = []
    seen = set()
    for w, val in evaluate_layers(len(gens), max_len, ex, invs, exact_matmul, exact_identity(n)):
        if val in seen:
            continue
        seen.add(val)
        d = float(np.linalg.norm(np.array(val, dtype=float) - np.eye(n), 2))
        if d <= delta:
            out.append((w, Matrix.from_exact(val), d))
            if len(out) >= max_count:
                break
    return out


def find_pingpong_near(generators: Sequence[Matrix], targets: Sequence[Matrix], delta: float,
                       budget: int = 5_000, field: FieldDescriptor | None = None,
                       config: Config = DEFAULT, max_len: int = 5) -> NearPingPong:
    """Perturb each target t_i to w_i t_i w_i' with w, w' near the identity.

    Closeness is measured in the real operator norm of the exact matrices,
    while the ping-pong certificate is computed in `field` (for instance a
    p-adic completion in which the perturbations are large).
    """
    gens = list(generators)
    if not gens:
        raise SearchFailed("empty generator list")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if any(g.exact is None for g in gens) or any(t.exact is None for t in targets):
        raise PreconditionViolated("generators and targets need exact-rational shadows")
    field = field or gens[0].field
    near = near_identity_words(gens, delta, max_len)
    cands = []
    for i, t in enumerate(targets):
        row = []
        for (w1, W1, d1), (w2, W2, d2) in itertools.product(near, repeat=2):
            x = exact_matmul(exact_matmul(W1.exact, t.exact), W2.exact)
            row.append(({"target": i, "left": w1, "right": w2, "sizes": (d1, d2), "exact": x},
                        Matrix.from_exact(x, field)))
        cands.append(row)
    try:
        choice, used = _backtrack(cands, config, budget)
    except BudgetExceeded as exc:
        raise SearchFailed(str(exc)) from exc
    if choice is None:
        raise SearchFailed(f"no perturbation within delta={delta} certified ({used} candidates, "
                           f"{len(near)} near-identity words)")
    cert = check_pingpong([c[1] for c in choice], config, certs=[c[2] for c in choice])
    metas = [c[0] for c in choice]
    words = [{"target": mt["target"], "left": mt["left"], "right": mt["right"]} for mt in metas]
    cert = _with_words(cert, words, {"candidates_evaluated": used, "near_identity_words": len(near),
                                     "delta": delta})
    return NearPingPong(cert, tuple((mt["left"], mt["right"]) for mt in metas),
                        tuple(mt["sizes"] for mt in metas), tuple(mt["exact"] for mt in metas))
