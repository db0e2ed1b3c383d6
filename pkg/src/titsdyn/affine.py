"""Affine maps x -> a x + b and disc ping-pong for free semigroups.

Contracting maps with distinct fixed points whose images of one common disc
are nested in it and pairwise disjoint generate a free semigroup: two
distinct positive words send the disc into disjoint subdiscs.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral
from typing import Sequence

from .errors import (BudgetExceeded, DiscOverlap, FixedPointCollision, InputError, NotContractive,
                     ParabolicElement)
from .field import FieldDescriptor, Padic, abs_value, decode_scalar, encode_scalar

SCHEMA_VERSION = 1


def _exact(x) -> bool:
    return isinstance(x, (Fraction, Integral)) and not isinstance(x, bool)


@dataclass(frozen=True)
class AffineElement:
    a: object
    b: object
    field: FieldDescriptor = FieldDescriptor.real()

    def __post_init__(self):
        if self.a == 0 or (isinstance(self.a, Padic) and self.a.is_zero()):
            raise InputError("dilation a must be nonzero")
        if _exact(self.a):
            object.__setattr__(self, "a", Fraction(self.a))
        if _exact(self.b):
            object.__setattr__(self, "b", Fraction(self.b))

    @property
    def is_exact(self) -> bool:
        return _exact(self.a) and _exact(self.b)

    def __call__(self, x):
        return self.a * x + self.b

    def compose(self, other: "AffineElement") -> "AffineElement":
        """self o other."""
        return AffineElement(self.a * other.a, self.a * other.b + self.b, self.field)

    __matmul__ = compose

    def inverse(self) -> "AffineElement":
        inv = 1 / self.a
        return AffineElement(inv, -self.b * inv, self.field)

    def abs_a(self):
        return abs_value(self.a, self.field)

    def key(self) -> tuple:
        if self.is_exact:
            return (self.a, self.b)
        if isinstance(self.a, Padic):
            return (self.a.digits_key(), self.b.digits_key() if isinstance(self.b, Padic) else self.b)
        return (complex(self.a), complex(self.b))

    def to_json(self) -> dict:
        return {"a": encode_scalar(self.a), "b": encode_scalar(self.b)}

    @classmethod
    def from_json(cls, obj: dict, field: FieldDescriptor | None = None) -> "AffineElement":
        field = field or FieldDescriptor.real()
        try:
            a, b = decode_scalar(obj["a"]), decode_scalar(obj["b"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"affine element needs 'a' and 'b': {obj}") from exc
        return cls(a, b, field)


def _dist(x, y, field: FieldDescriptor):
    d = x - y
    if isinstance(d, Padic) and d.is_zero():
        return Fraction(0)
    return abs_value(d, field)


def _margin(elements: Sequence[AffineElement]) -> float:
    if all(g.is_exact for g in elements) or elements[0].field.kind == "padic":
        return 0
    return elements[0].field.margin


def fixed_point(g: AffineElement):
    margin = _margin([g])
    one_minus = 1 - g.a
    if (isinstance(one_minus, Padic) and one_minus.is_zero()) or abs_value(one_minus, g.field) <= margin:
        raise ParabolicElement(f"a = {g.a} has no finite fixed point")
    return g.b / one_minus


def contract_disc(g: AffineElement, center, R):
    """Image of the closed disc (center, R): (a center + b, |a| R)."""
    return g(center), g.abs_a() * R


@dataclass(frozen=True, eq=False)
class SemigroupCertificate:
    elements: tuple
    center: object
    radius: object
    fixed_points: tuple
    image_discs: tuple  # (center, radius) per element

    @property
    def field(self) -> FieldDescriptor:
        return self.elements[0].field

    def to_json(self) -> dict:
        return {
            "kind": "semigroup",
            "schema_version": SCHEMA_VERSION,
            "field": self.field.to_json(),
            "elements": [g.to_json() for g in self.elements],
            "center": encode_scalar(self.center),
            "radius": encode_scalar(self.radius),
            "fixed_points": [encode_scalar(x) for x in self.fixed_points],
            "image_discs": [{"center": encode_scalar(c), "radius": encode_scalar(r)} for c, r in self.image_discs],
        }


def _centre_and_radius(elements, fps, field):
    if field.kind == "padic":
        xc = fps[0]
        R = max(_dist(xc, x, field) for x in fps)
    else:
        xc = sum(fps[1:], fps[0]) / len(fps)
        # smallest R with every image disc inside disc(xc, R)
        R = max(_dist(1, g.a, field) * _dist(xc, x, field) / (1 - g.abs_a()) for g, x in zip(elements, fps))
    if R == 0:
        R = Fraction(1) if _exact(xc) or field.kind == "padic" else 1.0
    return xc, R


def certify_free_semigroup(elements: Sequence[AffineElement]) -> SemigroupCertificate:
    elements = tuple(elements)
    if not elements:
        raise InputError("need at least one element")
    field = elements[0].field
    margin = _margin(elements)
    for i, g in enumerate(elements):
        if not g.abs_a() < 1 - margin:
            raise NotContractive(i, f"|a_{i}| = {float(g.abs_a()):.6g} is not below 1")
    fps = tuple(fixed_point(g) for g in elements)
    for i, j in itertools.combinations(range(len(elements)), 2):
        if _dist(fps[i], fps[j], field) <= margin:
            raise FixedPointCollision(i, j)
    xc, R = _centre_and_radius(elements, fps, field)
    discs = tuple(contract_disc(g, xc, R) for g in elements)
    for i, (c, r) in enumerate(discs):
        slack = R - (_dist(c, xc, field) if field.kind != "padic" else 0) - r
        if field.kind == "padic":
            inside = _dist(c, xc, field) <= R and r <= R
        else:
            inside = slack >= -margin * max(1, abs(R))
        if not inside:
            raise DiscOverlap(i, i, float(slack), 0.0)
    for i, j in itertools.combinations(range(len(elements)), 2):
        (ci, ri), (cj, rj) = discs[i], discs[j]
        gap = _dist(ci, cj, field)
        needed = max(ri, rj) if field.kind == "padic" else ri + rj
        if not gap > needed + margin * max(1, abs(R)):
            raise DiscOverlap(i, j, float(gap), float(needed))
    return SemigroupCertificate(elements, xc, R, fps, discs)


@dataclass
class SemigroupOracleResult:
    free: bool
    pair: tuple | None  # two distinct words (tuples of indices) giving the same map
    words_checked: int

    def __bool__(self) -> bool:
        return self.free


def _identity_like(g: AffineElement) -> AffineElement:
    one = Fraction(1) if g.is_exact else (g.a / g.a)
    return AffineElement(one, one - one, g.field)


def positive_words(t: int, max_len: int):
    for n in range(1, max_len + 1):
        yield from itertools.product(range(t), repeat=n)


def semigroup_oracle(elements: Sequence[AffineElement], max_len: int, budget: int = 2_000_000
                     ) -> SemigroupOracleResult:
    """Exact check that all positive words of length <= max_len are distinct maps."""
    elements = tuple(elements)
    if not all(g.is_exact for g in elements):
        raise InputError("the semigroup oracle needs exact-rational elements")
    t = len(elements)
    total = sum(t ** n for n in range(1, max_len + 1))
    if total > budget:
        raise BudgetExceeded(f"{total} words exceed budget {budget}")
    # integer arithmetic over a common denominator D: a word of length n acting
    # as x -> a x + b is stored as (a D^n, b D^n) and keyed at scale D^max_len
    D = math.lcm(*(Fraction(x).denominator for g in elements for x in (g.a, g.b)))
    gens = [(int(Fraction(g.a) * D), int(Fraction(g.b) * D)) for g in elements]
    seen: dict = {}
    layer = [((), (1, 0))]
    count = 0
    for n in range(1, max_len + 1):
        scale = D ** (max_len - n)
        nxt = []
        for w, (a, b) in layer:
            for k, (ga, gb) in enumerate(gens):
                # word w followed by letter k acts as w o g_k
                val = (a * ga, a * gb + b * D)
                w2 = w + (k,)
                count += 1
                key = (val[0] * scale, val[1] * scale)
                if key in seen:
                    return SemigroupOracleResult(False, (seen[key], w2), count)
                seen[key] = w2
                nxt.append((w2, val))
        layer = nxt
    return SemigroupOracleResult(True, None, count)


def word_map(elements: Sequence[AffineElement], word: Sequence[int]) -> AffineElement:
    out = _identity_like(elements[0])
    for k in word:
        out = out @ elements[k]
    return out


def distinct_images(elements: Sequence[AffineElement], x, n: int) -> int:
    """Number of distinct points g_w(x) over positive words of length exactly n."""
    pts = {x}
    for _ in range(n):
        pts = {g(y) for y in pts for g in elements}
    return len(pts)
