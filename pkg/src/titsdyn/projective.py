"""Points, hyperplanes and the standard metric on projective space.

The distance between lines [v], [w] is |v ^ w| / (|v| |w|), using the
Euclidean norm over R and C and the max norm over Q_p.  A hyperplane is
stored through a norm-one functional f, and a point's distance to it is
|f(v)| / |v|.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionMismatch, InputError, Singular
from .field import FieldDescriptor, Padic, decode_scalar, encode_scalar, rational_embed
from .linalg import Matrix, _padic_matmul, wedge_minors

_CANON_TOL = 1e-9


def _normalize(field: FieldDescriptor, vec) -> np.ndarray:
    if field.kind == "padic":
        vec = np.asarray(vec, dtype=object)
        vals = [x.val if not x.is_zero() else None for x in vec]
        live = [v for v in vals if v is not None]
        if not live:
            raise Singular("zero vector has no projective class")
        vmin = min(live)
        lead = next(i for i, v in enumerate(vals) if v == vmin)
        inv = vec[lead].inverse()
        out = np.empty(len(vec), dtype=object)
        for i, x in enumerate(vec):
            out[i] = Padic.one(field.p, field.precision) if i == lead else x * inv
        return out
    dtype = complex if field.kind == "complex" else float
    vec = np.asarray(vec, dtype=dtype)
    nrm = np.linalg.norm(vec)
    if nrm == 0 or not np.isfinite(nrm):
        raise Singular("zero or non-finite vector has no projective class")
    vec = vec / nrm
    mags = np.abs(vec)
    lead = int(np.argmax(mags > _CANON_TOL))
    phase = vec[lead] / mags[lead]
    return vec / phase


def _coerce_vec(field: FieldDescriptor, vec):
    if field.kind == "padic":
        return [x if isinstance(x, Padic) else rational_embed(field, x) for x in vec]
    if field.kind == "real":
        return [float(x) for x in vec]
    return [complex(x) for x in vec]


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    field: FieldDescriptor
    vec: np.ndarray

    @classmethod
    def from_vector(cls, vec, field: FieldDescriptor | None = None) -> "ProjectivePoint":
        field = field or FieldDescriptor.real()
        return cls(field, _normalize(field, _coerce_vec(field, vec)))

    @property
    def n(self) -> int:
        return len(self.vec)

    def key(self, digits: int = 9) -> tuple:
        if self.field.kind == "padic":
            return tuple(x.digits_key(digits) for x in self.vec)
        v = np.round(self.vec, digits) + 0.0
        return tuple(v.tolist())

    def to_json(self) -> dict:
        return {"role": "point", "field": self.field.to_json(),
                "vector": [encode_scalar(x if self.field.kind == "padic" else
                                         (complex(x) if self.field.kind == "complex" else float(x)))
                           for x in self.vec]}

    @classmethod
    def from_json(cls, obj: dict, eta: float = 1e-9) -> "ProjectivePoint":
        if obj.get("role") != "point":
            raise InputError("expected role 'point'")
        field = FieldDescriptor.from_json(obj["field"], eta=eta)
        return cls.from_vector([decode_scalar(x, field) for x in obj["vector"]], field)

    def __repr__(self) -> str:
        return f"[{', '.join(_fmt(x) for x in self.vec)}]"


@dataclass(frozen=True, eq=False)
class ProjectiveHyperplane:
    field: FieldDescriptor
    functional: np.ndarray

    @classmethod
    def from_functional(cls, f, field: FieldDescriptor | None = None) -> "ProjectiveHyperplane":
        field = field or FieldDescriptor.real()
        return cls(field, _normalize(field, _coerce_vec(field, f)))

    @property
    def n(self) -> int:
        return len(self.functional)

    def key(self, digits: int = 9) -> tuple:
        return ProjectivePoint(self.field, self.functional).key(digits)

    def to_json(self) -> dict:
        d = ProjectivePoint(self.field, self.functional).to_json()
        d["role"] = "hyperplane"
        return d

    @classmethod
    def from_json(cls, obj: dict, eta: float = 1e-9) -> "ProjectiveHyperplane":
        if obj.get("role") != "hyperplane":
            raise InputError("expected role 'hyperplane'")
        field = FieldDescriptor.from_json(obj["field"], eta=eta)
        return cls.from_functional([decode_scalar(x, field) for x in obj["vector"]], field)

    def __repr__(self) -> str:
        return f"ker({', '.join(_fmt(x) for x in self.functional)})"


def _fmt(x) -> str:
    if isinstance(x, Padic):
        return str(x.lift()) if x.val >= 0 else repr(x)
    if isinstance(x, complex):
        return f"{x:.6g}"
    return f"{float(x):.6g}"


def _same_dim(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"dimensions {a.n} and {b.n}")


def distance(p: ProjectivePoint, q: ProjectivePoint):
    """Standard metric; an exact Fraction over Q_p."""
    _same_dim(p, q)
    if p.field.kind == "padic":
        return max((m.abs() for m in wedge_minors(list(p.vec), list(q.vec))), default=Fraction(0))
    M = np.outer(p.vec, q.vec)
    iu = np.triu_indices(p.n, 1)
    d = float(np.sqrt(np.sum(np.abs(M[iu] - M.T[iu]) ** 2)))
    return min(d, 1.0)


def distance_to_hyperplane(p: ProjectivePoint, H: ProjectiveHyperplane):
    _same_dim(p, H)
    if p.field.kind == "padic":
        acc = Padic.zero(p.field.p, p.field.precision)
        for f, v in zip(H.functional, p.vec):
            acc = acc + f * v
        return acc.abs()
    return min(float(abs(np.dot(H.functional, p.vec))), 1.0)


def hausdorff_distance(H1: ProjectiveHyperplane, H2: ProjectiveHyperplane):
    """max over x in H1 of |f2(x)| / |x|."""
    _same_dim(H1, H2)
    if H1.field.kind == "padic":
        f1, f2 = H1.functional, H2.functional
        j = next(i for i, x in enumerate(f1) if not x.is_zero() and x.val == 0)
        return max((((f2[i] - f2[j] * f1[i]).abs()) for i in range(H1.n) if i != j), default=Fraction(0))
    u1 = np.conj(H1.functional)
    u2 = np.conj(H2.functional)
    return min(float(np.linalg.norm(u2 - np.vdot(u1, u2) * u1)), 1.0)


def apply(g: Matrix, vec):
    if g.is_padic:
        col = np.empty((len(vec), 1), dtype=object)
        col[:, 0] = vec
        return _padic_matmul(g.data, col, g.field.p, g.field.precision)[:, 0]
    return g.data @ vec


def act(g: Matrix, p: ProjectivePoint) -> ProjectivePoint:
    _same_dim(g, p)
    return ProjectivePoint(p.field, _normalize(p.field, apply(g, p.vec)))


def pull_hyperplane(g: Matrix, H: ProjectiveHyperplane) -> ProjectiveHyperplane:
    """g^{-1}(H) = ker(f o g), the functional action used for repelling hyperplanes."""
    _same_dim(g, H)
    return ProjectiveHyperplane(H.field, _normalize(H.field, apply(g.transpose(), H.functional)))


def act_hyperplane(g: Matrix, H: ProjectiveHyperplane) -> ProjectiveHyperplane:
    """g(H) = ker(f o g^{-1})."""
    return pull_hyperplane(g.inverse(), H)


def basis_point(i: int, n: int, field: FieldDescriptor | None = None) -> ProjectivePoint:
    return ProjectivePoint.from_vector([Fraction(int(k == i)) for k in range(n)], field)


def coordinate_hyperplane(i: int, n: int, field: FieldDescriptor | None = None) -> ProjectiveHyperplane:
    """ker(e_i^*)."""
    return ProjectiveHyperplane.from_functional([Fraction(int(k == i)) for k in range(n)], field)


# sampling

def sample_sphere(rng: np.random.Generator, n: int, count: int, complex_: bool = False) -> np.ndarray:
    z = rng.standard_normal((count, n))
    if complex_:
        z = z + 1j * rng.standard_normal((count, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_padic_vectors(rng: np.random.Generator, field: FieldDescriptor, n: int, count: int) -> list:
    """Uniform digits to depth N on Z_p^n minus pZ_p^n."""
    p, N = field.p, field.precision
    out = []
    while len(out) < count:
        ints = [int(x) for x in rng.integers(0, p, size=(n, N)) @ (p ** np.arange(N, dtype=object))]
        if all(x % p == 0 for x in ints):
            continue
        out.append([Padic.from_rational(p, x, N) for x in ints])
    return out
