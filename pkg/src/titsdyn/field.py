"""Scalars over R, C and Q_p, plus exact rationals for the oracles.

A p-adic number is stored as ``p**val * unit`` where ``unit`` is an integer
prime to p known modulo ``p**prec`` (the relative precision).  Every result
is capped at the field's precision N.  Zero is special: ``unit == 0`` and
``val`` is the absolute precision to which the value is known to vanish
(``math.inf`` for an exact zero).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational
from typing import NamedTuple, Union

import sympy

from .errors import DivisionByZero, InputError, PrecisionExhausted

KINDS = ("real", "complex", "padic")


@dataclass(frozen=True)
class FieldDescriptor:
    kind: str
    p: int | None = None
    precision: int | None = None
    eta: float = 1e-9

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "padic":
            if self.p is None or not sympy.isprime(self.p):
                raise ValueError(f"p-adic field needs a prime p, got {self.p}")
            if self.precision is None or self.precision < 1:
                raise ValueError("p-adic precision must be >= 1")
        elif self.eta < 0:
            raise ValueError("eta must be nonnegative")

    @classmethod
    def real(cls, eta: float = 1e-9) -> "FieldDescriptor":
        return cls("real", eta=eta)

    @classmethod
    def complex(cls, eta: float = 1e-9) -> "FieldDescriptor":
        return cls("complex", eta=eta)

    @classmethod
    def padic(cls, p: int, precision: int = 20) -> "FieldDescriptor":
        return cls("padic", p=p, precision=precision, eta=0.0)

    @property
    def archimedean(self) -> bool:
        return self.kind != "padic"

    @property
    def margin(self) -> float:
        """Slack added to float comparisons inside certificates."""
        return 0.0 if self.kind == "padic" else 4 * self.eta

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "padic":
            out["p"] = self.p
            out["precision"] = self.precision
        return out

    @classmethod
    def from_json(cls, obj: dict, eta: float = 1e-9) -> "FieldDescriptor":
        kind = obj.get("kind")
        if kind == "padic":
            return cls.padic(int(obj["p"]), int(obj.get("precision", 20)))
        if kind in ("real", "complex"):
            return cls(kind, eta=eta)
        raise InputError(f"field.kind: unknown kind {kind!r}")

    def __str__(self) -> str:
        if self.kind == "padic":
            return f"Q_{self.p} (N={self.precision})"
        return {"real": "R", "complex": "C"}[self.kind]


def valuation_int(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0")
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def rational_valuation(q, p: int) -> float:
    q = Fraction(q)
    if q == 0:
        return math.inf
    return valuation_int(q.numerator, p) - valuation_int(q.denominator, p)


class Padic:
    """Fixed-precision element of Q_p."""

    __slots__ = ("p", "val", "unit", "prec", "cap")

    def __init__(self, p: int, val, unit: int, prec: int, cap: int):
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "cap", cap)
        if unit == 0 or prec <= 0:
            object.__setattr__(self, "val", val)
            object.__setattr__(self, "unit", 0)
            object.__setattr__(self, "prec", 0)
            return
        prec = min(prec, cap)
        unit %= p ** prec
        object.__setattr__(self, "val", val)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "prec", prec)

    def __setattr__(self, key, value):
        raise AttributeError("Padic is immutable")

    # construction
    @classmethod
    def from_rational(cls, p: int, q, cap: int) -> "Padic":
        q = Fraction(q)
        if q == 0:
            return cls.zero(p, cap)
        num, den = q.numerator, q.denominator
        a = valuation_int(num, p)
        b = valuation_int(den, p)
        mod = p ** cap
        unit = (num // p ** a) * pow(den // p ** b, -1, mod) % mod
        return cls(p, a - b, unit, cap, cap)

    @classmethod
    def zero(cls, p: int, cap: int, absprec=math.inf) -> "Padic":
        return cls(p, absprec, 0, 0, cap)

    @classmethod
    def one(cls, p: int, cap: int) -> "Padic":
        return cls(p, 0, 1, cap, cap)

    def _coerce(self, other) -> "Padic":
        if isinstance(other, Padic):
            if other.p != self.p:
                raise ValueError("mixing different primes")
            return other
        if isinstance(other, (Integral, Rational, Fraction)):
            return Padic.from_rational(self.p, other, self.cap)
        return NotImplemented

    # queries
    def is_zero(self) -> bool:
        return self.unit == 0

    @property
    def absprec(self):
        return self.val if self.is_zero() else self.val + self.prec

    def valuation(self):
        return math.inf if self.is_zero() else self.val

    def abs(self) -> Fraction:
        """|x|_p as an exact rational; an inexact zero reports 0."""
        if self.is_zero():
            return Fraction(0)
        return Fraction(1, self.p ** self.val) if self.val >= 0 else Fraction(self.p ** (-self.val))

    def abs_upper(self) -> Fraction:
        """Largest |x| consistent with the stored digits."""
        if not self.is_zero():
            return self.abs()
        if self.val == math.inf:
            return Fraction(0)
        v = int(self.val)
        return Fraction(1, self.p ** v) if v >= 0 else Fraction(self.p ** (-v))

    def lift(self) -> Fraction:
        """Rational representative p**val * unit (unit in [0, p**prec))."""
        if self.is_zero():
            return Fraction(0)
        if self.val >= 0:
            return Fraction(self.unit * self.p ** self.val)
        return Fraction(self.unit, self.p ** (-self.val))

    # arithmetic
    def add(self, other: "Padic") -> tuple["Padic", int]:
        """Sum plus the number of relative digits lost to cancellation."""
        p, cap = self.p, self.cap
        if self.is_zero() or other.is_zero():
            z, x = (self, other) if self.is_zero() else (other, self)
            if x.is_zero():
                return Padic.zero(p, cap, min(z.val, x.val)), 0
            if z.val <= x.val:
                return Padic.zero(p, cap, z.val), x.prec
            keep = min(x.prec, z.val - x.val)
            return Padic(p, x.val, x.unit, keep, cap), x.prec - keep
        v = min(self.val, other.val)
        absprec = min(self.absprec, other.absprec)
        rel = absprec - v
        mod = p ** rel
        s = (self.unit * p ** (self.val - v) + other.unit * p ** (other.val - v)) % mod
        if s == 0:
            return Padic.zero(p, cap, absprec), min(self.prec, other.prec)
        k = valuation_int(s, p)
        out = Padic(p, v + k, s // p ** k, rel - k, cap)
        return out, max(0, min(self.prec, other.prec) - out.prec)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.add(other)[0]

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        return Padic(self.p, self.val, -self.unit, self.prec, self.cap)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.add(-other)[0]

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other.add(-self)[0]

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p, cap = self.p, self.cap
        if self.is_zero() or other.is_zero():
            # O(p^a) * p^v u = O(p^(a+v)); both branches read `val`
            return Padic.zero(p, cap, self.val + other.val)
        prec = min(self.prec, other.prec)
        return Padic(p, self.val + other.val, self.unit * other.unit, prec, cap)

    __rmul__ = __mul__

    def inverse(self) -> "Padic":
        if self.is_zero():
            raise DivisionByZero("inverse of p-adic zero")
        return Padic(self.p, -self.val, pow(self.unit, -1, self.p ** self.prec), self.prec, self.cap)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = Padic.one(self.p, self.cap)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __abs__(self):
        return self.abs()

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        if self.is_zero() or other.is_zero():
            diff = self - other
            return diff.is_zero()
        if self.val != other.val:
            return False
        return (self.unit - other.unit) % self.p ** min(self.prec, other.prec) == 0

    __hash__ = None

    def digits_key(self, digits: int | None = None) -> tuple:
        """Hashable key equal for values agreeing to `digits` relative digits."""
        if self.is_zero():
            return (self.p, "zero")
        d = self.prec if digits is None else min(digits, self.prec)
        return (self.p, self.val, self.unit % self.p ** d)

    def __repr__(self) -> str:
        if self.is_zero():
            tail = "" if self.val == math.inf else f" + O({self.p}^{self.val})"
            return f"Padic({self.p}: 0{tail})"
        return f"Padic({self.p}: {self.p}^{self.val} * {self.unit} + O({self.p}^{self.absprec}))"


Scalar = Union[float, complex, Fraction, int, Padic]


class ArithResult(NamedTuple):
    value: Scalar
    digits_lost: float


def rational_embed(field: FieldDescriptor, q) -> Scalar:
    q = Fraction(q)
    if field.kind == "real":
        return float(q)
    if field.kind == "complex":
        return complex(float(q))
    return Padic.from_rational(field.p, q, field.precision)


def abs_value(x: Scalar, field: FieldDescriptor | None = None):
    """|x| in its field.  Exact (Fraction) for p-adic and rational input."""
    if isinstance(x, Padic):
        return x.abs()
    if field is not None and field.kind == "padic":
        q = Fraction(x)
        if q == 0:
            return Fraction(0)
        v = rational_valuation(q, field.p)
        return Fraction(field.p) ** (-v)
    if isinstance(x, (Fraction, Integral)):
        return abs(Fraction(x))
    return abs(x)


def field_arithmetic(x: Scalar, y: Scalar | None, op: str, field: FieldDescriptor | None = None) -> ArithResult:
    """Checked ring operation ('add', 'mul', 'inv') reporting cancellation loss.

    For floats the loss is in decimal digits, for p-adics in p-adic digits.
    """
    if op not in ("add", "mul", "inv"):
        raise ValueError(f"unknown op {op!r}")
    if field is not None and field.kind == "padic":
        x = x if isinstance(x, Padic) else rational_embed(field, x)
        if y is not None and not isinstance(y, Padic):
            y = rational_embed(field, y)
    if isinstance(x, Padic):
        if op == "inv":
            return ArithResult(x.inverse(), 0)
        if op == "mul":
            return ArithResult(x * y, 0)
        if not x.is_zero() and not y.is_zero():
            out, lost = x.add(y)
            if out.is_zero():
                raise PrecisionExhausted(f"addition cancelled all {lost} tracked digits")
            return ArithResult(out, lost)
        return ArithResult(x + y, 0)
    if op == "inv":
        if x == 0:
            raise DivisionByZero("inverse of zero")
        if isinstance(x, (Fraction, Integral)):
            return ArithResult(1 / Fraction(x), 0)
        return ArithResult(1 / x, 0)
    if op == "mul":
        return ArithResult(x * y, 0)
    s = x + y
    big = max(abs(x), abs(y))
    if isinstance(s, (Fraction, Integral)) or big == 0:
        return ArithResult(s, 0)
    lost = math.inf if s == 0 else max(0.0, math.log10(big / abs(s)))
    return ArithResult(s, lost)


# JSON encoding

def encode_scalar(x: Scalar):
    if isinstance(x, Padic):
        val = "inf" if x.val == math.inf else int(x.val)
        return {"padic": {"p": x.p, "val": val, "unit": str(x.unit), "prec": x.prec, "cap": x.cap}}
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, (Fraction, Integral)):
        q = Fraction(x)
        return {"num": str(q.numerator), "den": str(q.denominator)}
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return float(x)


def decode_scalar(obj, field: FieldDescriptor | None = None) -> Scalar:
    """Decode one scalar; rationals stay exact unless a field is given."""
    if isinstance(obj, dict):
        if "num" in obj:
            try:
                q = Fraction(int(obj["num"]), int(obj["den"]))
            except (ValueError, ZeroDivisionError, KeyError) as exc:
                raise InputError(f"bad rational {obj}: {exc}") from exc
            return q if field is None else rational_embed(field, q)
        if "re" in obj:
            return complex(float(obj["re"]), float(obj.get("im", 0.0)))
        if "padic" in obj:
            d = obj["padic"]
            val = math.inf if d["val"] == "inf" else int(d["val"])
            return Padic(int(d["p"]), val, int(d["unit"]), int(d["prec"]), int(d["cap"]))
        raise InputError(f"unrecognised scalar encoding {obj}")
    if isinstance(obj, str):
        try:
            q = Fraction(obj)
        except ValueError as exc:
            raise InputError(f"bad scalar string {obj!r}") from exc
        return q if field is None else rational_embed(field, q)
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise InputError(f"bad scalar {obj!r}")
    if isinstance(obj, int):
        return Fraction(obj) if field is None else rational_embed(field, obj)
    if field is not None and field.kind == "padic":
        raise InputError("floats cannot be embedded in Q_p")
    return float(obj)
