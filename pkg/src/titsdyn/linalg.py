"""Matrices over a local field and their Cartan (KAK) decomposition.

Real and complex matrices are numpy arrays; p-adic matrices are object
arrays of `Padic`.  A matrix built from rationals keeps an exact Fraction
shadow so that oracles and re-embeddings into another field stay exact.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

import numpy as np

from .errors import DimensionMismatch, InputError, PrecisionExhausted, Singular
from .field import FieldDescriptor, Padic, abs_value, decode_scalar, encode_scalar, rational_embed

ExactRows = tuple  # tuple[tuple[Fraction, ...], ...]
_MACH = np.finfo(float).eps


# exact rational helpers

def exact_identity(n: int) -> ExactRows:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def exact_matmul(A: ExactRows, B: ExactRows) -> ExactRows:
    cols = list(zip(*B))
    return tuple(tuple(sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in cols) for row in A)


def exact_inverse(A: ExactRows) -> ExactRows:
    n = len(A)
    M = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise Singular("exact matrix is singular")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [x * inv for x in M[c]]
        for r in range(n):
            if r != c and M[r][c] != 0:
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return tuple(tuple(row[n:]) for row in M)


def exact_det(A: ExactRows) -> Fraction:
    n = len(A)
    M = [list(r) for r in A]
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return det


def _is_rational(x) -> bool:
    return isinstance(x, (Fraction, Integral)) and not isinstance(x, bool)


# p-adic helpers

def _padic_matmul(A: np.ndarray, B: np.ndarray, p: int, cap: int) -> np.ndarray:
    n, k = A.shape
    m = B.shape[1]
    out = np.empty((n, m), dtype=object)
    for i in range(n):
        for j in range(m):
            acc = Padic.zero(p, cap)
            for t in range(k):
                acc = acc + A[i, t] * B[t, j]
            out[i, j] = acc
    return out


def _padic_identity(n: int, p: int, cap: int) -> np.ndarray:
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = Padic.one(p, cap) if i == j else Padic.zero(p, cap)
    return out


@dataclass(frozen=True, eq=False)
class Matrix:
    field: FieldDescriptor
    data: np.ndarray
    exact: ExactRows | None = None

    def __post_init__(self):
        d = self.data
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise DimensionMismatch(f"matrix must be square, got shape {d.shape}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def is_padic(self) -> bool:
        return self.field.kind == "padic"

    # construction
    @classmethod
    def from_exact(cls, rows, field: FieldDescriptor | None = None) -> "Matrix":
        field = field or FieldDescriptor.real()
        exact = tuple(tuple(Fraction(x) for x in row) for row in rows)
        n = len(exact)
        if any(len(r) != n for r in exact):
            raise DimensionMismatch("rows of unequal length")
        if field.kind == "padic":
            data = np.empty((n, n), dtype=object)
            for i in range(n):
                for j in range(n):
                    data[i, j] = rational_embed(field, exact[i][j])
        else:
            dtype = complex if field.kind == "complex" else float
            data = np.array([[float(x) for x in row] for row in exact], dtype=dtype)
        return cls(field, data, exact)

    @classmethod
    def from_rows(cls, rows, field: FieldDescriptor | None = None) -> "Matrix":
        """Build from nested sequences; all-rational input keeps an exact shadow."""
        field = field or FieldDescriptor.real()
        rows = [list(r) for r in rows]
        flat = [x for r in rows for x in r]
        if all(_is_rational(x) for x in flat):
            return cls.from_exact(rows, field)
        if field.kind == "padic":
            if all(isinstance(x, Padic) for x in flat):
                data = np.empty((len(rows), len(rows)), dtype=object)
                for i, r in enumerate(rows):
                    for j, x in enumerate(r):
                        data[i, j] = x
                return cls(field, data)
            raise InputError("p-adic matrices need rational or Padic entries")
        dtype = complex if field.kind == "complex" else float
        return cls(field, np.array(rows, dtype=dtype))

    @classmethod
    def identity(cls, n: int, field: FieldDescriptor | None = None) -> "Matrix":
        return cls.from_exact(exact_identity(n), field)

    def embed(self, field: FieldDescriptor) -> "Matrix":
        """Re-embed the exact shadow into another field."""
        if self.exact is None:
            raise InputError("embedding into another field needs an exact shadow")
        return Matrix.from_exact(self.exact, field)

    # arithmetic
    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.n != other.n:
            raise DimensionMismatch(f"{self.n} vs {other.n}")
        exact = exact_matmul(self.exact, other.exact) if self.exact is not None and other.exact is not None else None
        if self.is_padic:
            data = _padic_matmul(self.data, other.data, self.field.p, self.field.precision)
        else:
            data = self.data @ other.data
        return Matrix(self.field, data, exact)

    def inverse(self) -> "Matrix":
        if self.exact is not None:
            return Matrix.from_exact(exact_inverse(self.exact), self.field)
        if self.is_padic:
            return Matrix(self.field, _padic_inverse(self.data, self.field))
        try:
            s = np.linalg.svd(self.data, compute_uv=False)
            if s[-1] <= self.field.eta * s[0]:
                raise Singular("matrix is singular within margin")
            return Matrix(self.field, np.linalg.inv(self.data))
        except np.linalg.LinAlgError as exc:
            raise Singular(str(exc)) from exc

    def transpose(self) -> "Matrix":
        exact = tuple(zip(*self.exact)) if self.exact is not None else None
        return Matrix(self.field, self.data.T.copy(), exact)

    def power(self, k: int) -> "Matrix":
        if k < 0:
            return self.inverse().power(-k)
        out = Matrix.identity(self.n, self.field) if self.exact is not None else None
        if out is None:
            if self.is_padic:
                out = Matrix(self.field, _padic_identity(self.n, self.field.p, self.field.precision))
            else:
                out = Matrix(self.field, np.eye(self.n, dtype=self.data.dtype))
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def scaled(self) -> "Matrix":
        """Same projective map with entries of order one (floats only)."""
        if self.is_padic:
            return self
        m = np.max(np.abs(self.data))
        return Matrix(self.field, self.data / m, self.exact) if m > 0 else self

    def to_float(self) -> np.ndarray:
        if self.is_padic:
            raise TypeError("p-adic matrix has no float image")
        return self.data

    def entry_abs(self) -> np.ndarray:
        f = np.vectorize(lambda x: float(abs_value(x)), otypes=[float])
        return f(self.data) if self.is_padic else np.abs(self.data)

    def __repr__(self) -> str:
        return f"Matrix({self.field}, n={self.n})"

    # JSON
    def to_json(self) -> dict:
        if self.exact is not None:
            rows = [[encode_scalar(x) for x in row] for row in self.exact]
        elif self.field.kind == "complex":
            rows = [[encode_scalar(complex(x)) for x in row] for row in self.data]
        elif self.is_padic:
            rows = [[encode_scalar(x) for x in row] for row in self.data]
        else:
            rows = [[float(x) for x in row] for row in self.data]
        return {"field": self.field.to_json(), "n": self.n, "rows": rows}

    @classmethod
    def from_json(cls, obj: dict, eta: float = 1e-9) -> "Matrix":
        field = FieldDescriptor.from_json(obj["field"], eta=eta)
        rows = obj["rows"]
        n = int(obj.get("n", len(rows)))
        if len(rows) != n or any(len(r) != n for r in rows):
            raise InputError(f"matrix rows do not form an {n}x{n} array")
        decoded = [[decode_scalar(x) for x in row] for row in rows]
        flat = [x for r in decoded for x in r]
        if all(_is_rational(x) for x in flat):
            return cls.from_exact(decoded, field)
        if field.kind == "padic":
            decoded = [[x if isinstance(x, Padic) else rational_embed(field, x) for x in r] for r in decoded]
            return cls.from_rows(decoded, field)
        dtype = complex if field.kind == "complex" else float
        return cls(field, np.array([[complex(x) if dtype is complex else float(x) for x in r] for r in decoded],
                                   dtype=dtype))


def _padic_inverse(data: np.ndarray, field: FieldDescriptor) -> np.ndarray:
    n = data.shape[0]
    p, cap = field.p, field.precision
    M = [list(data[i]) + list(_padic_identity(n, p, cap)[i]) for i in range(n)]
    for c in range(n):
        cands = [r for r in range(c, n) if not M[r][c].is_zero()]
        if not cands:
            raise Singular("p-adic matrix is singular to working precision")
        piv = min(cands, key=lambda r: M[r][c].val)
        M[c], M[piv] = M[piv], M[c]
        inv = M[c][c].inverse()
        M[c] = [x * inv for x in M[c]]
        for r in range(n):
            if r != c and not M[r][c].is_zero():
                f = M[r][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = M[i][n + j]
    return out


# exterior square

def _check_dims(v, w):
    if len(v) != len(w):
        raise DimensionMismatch(f"vectors of length {len(v)} and {len(w)}")


def wedge_minors(v, w) -> list:
    return [v[i] * w[j] - v[j] * w[i] for i, j in itertools.combinations(range(len(v)), 2)]


def wedge_norm(v, w, field: FieldDescriptor | None = None):
    """Norm of v wedge w: Euclidean over R/C, max norm over Q_p."""
    _check_dims(v, w)
    padic = (field is not None and field.kind == "padic") or (len(v) and isinstance(v[0], Padic))
    if padic:
        minors = wedge_minors(list(v), list(w))
        return max((abs_value(m) for m in minors), default=Fraction(0))
    if all(_is_rational(x) for x in list(v) + list(w)):
        minors = wedge_minors([Fraction(x) for x in v], [Fraction(x) for x in w])
        sq = sum(m * m for m in minors)
        return float(np.sqrt(float(sq)))
    v = np.asarray(v)
    w = np.asarray(w)
    iu = np.triu_indices(len(v), 1)
    M = np.outer(v, w)
    minors = M[iu] - M.T[iu]
    return float(np.sqrt(np.sum(np.abs(minors) ** 2)))


# Cartan decomposition

@dataclass(frozen=True, eq=False)
class CartanDecomposition:
    k1: Matrix
    a: tuple
    k2: Matrix
    residual: float

    def abs_a(self) -> list:
        return [abs_value(x) for x in self.a]

    def compact_defect(self) -> float:
        """How far k1, k2 are from the maximal compact subgroup (0 = inside)."""
        if self.k1.is_padic:
            for k in (self.k1, self.k2):
                if any(not x.is_zero() and x.val < 0 for x in k.data.flat):
                    return float("inf")
                if _padic_det_valuation(k.data, k.field) != 0:
                    return float("inf")
            return 0.0
        out = 0.0
        for k in (self.k1, self.k2):
            d = k.data
            out = max(out, float(np.max(np.abs(d.conj().T @ d - np.eye(d.shape[0])))))
        return out


def _padic_det_valuation(data: np.ndarray, field: FieldDescriptor) -> int:
    n = data.shape[0]
    M = [list(row) for row in data]
    v = 0
    for c in range(n):
        cands = [r for r in range(c, n) if not M[r][c].is_zero()]
        if not cands:
            raise Singular("singular")
        piv = min(cands, key=lambda r: M[r][c].val)
        M[c], M[piv] = M[piv], M[c]
        v += M[c][c].val
        inv = M[c][c].inverse()
        for r in range(c + 1, n):
            if not M[r][c].is_zero():
                f = M[r][c] * inv
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return v


def _svd_high_precision(rows) -> tuple:
    import mpmath
    # digits needed grow with the spread of the entries
    flat = [abs(x) for r in rows for x in r if x != 0]
    spread = max(flat) / min(flat)
    dps = 30 + 4 * int(max(1.0, math.log10(float(spread)) if spread > 1 else 1.0))
    with mpmath.workdps(dps):
        A = mpmath.matrix([[mpmath.mpf(x.numerator) / x.denominator for x in r] for r in rows])
        U, S, V = mpmath.svd_r(A)
        n = len(rows)
        return (np.array([[float(U[i, j]) for j in range(n)] for i in range(n)]),
                np.array([float(S[i]) for i in range(n)]),
                np.array([[float(V[i, j]) for j in range(n)] for i in range(n)]))


def cartan(g: Matrix) -> CartanDecomposition:
    """g = k1 diag(a) k2 with |a_1| >= ... >= |a_n|.

    For floats `residual` is relative to the largest singular value.
    """
    if g.exact is not None and exact_det(g.exact) == 0:
        raise Singular("matrix is singular")
    if g.is_padic:
        return _cartan_padic(g)
    try:
        U, s, Vh = np.linalg.svd(g.data)
    except np.linalg.LinAlgError as exc:
        raise Singular(str(exc)) from exc
    if g.exact is not None:
        # invertibility was decided exactly; a float SVD that lost the small
        # singular values is redone at higher precision
        if s[-1] <= 1e-10 * s[0]:
            U, s, Vh = _svd_high_precision(g.exact)
    elif s[-1] <= g.field.eta * s[0] or s[0] == 0:
        raise Singular(f"smallest singular value {s[-1]:.3g} is below margin")
    recon = (U * s) @ Vh
    residual = float(np.max(np.abs(recon - g.data)) / s[0])
    return CartanDecomposition(Matrix(g.field, U), tuple(float(x) for x in s), Matrix(g.field, Vh), residual)


def _cartan_padic(g: Matrix) -> CartanDecomposition:
    field = g.field
    p, cap = field.p, field.precision
    n = g.n
    A = [list(row) for row in g.data]
    K1 = [list(row) for row in _padic_identity(n, p, cap)]
    K2 = [list(row) for row in _padic_identity(n, p, cap)]
    zero = Padic.zero(p, cap)
    for t in range(n):
        best = None
        inexact = False
        for i in range(t, n):
            for j in range(t, n):
                x = A[i][j]
                if x.is_zero():
                    inexact = inexact or x.val != float("inf")
                    continue
                if best is None or x.val < A[best[0]][best[1]].val:
                    best = (i, j)
        if best is None:
            if inexact:
                raise PrecisionExhausted("pivot digits exhausted during Smith reduction")
            raise Singular("p-adic matrix is singular")
        i, j = best
        # row swap t<->i on A is undone by a column swap on k1; likewise for k2
        A[t], A[i] = A[i], A[t]
        for row in K1:
            row[t], row[i] = row[i], row[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        K2[t], K2[j] = K2[j], K2[t]
        pinv = A[t][t].inverse()
        for i in range(t + 1, n):
            if A[i][t].is_zero():
                A[i][t] = zero
                continue
            c = A[i][t] * pinv
            A[i] = [x - c * y for x, y in zip(A[i], A[t])]
            A[i][t] = zero
            for row in K1:
                row[t] = row[t] + c * row[i]
        for j in range(t + 1, n):
            if A[t][j].is_zero():
                A[t][j] = zero
                continue
            c = A[t][j] * pinv
            A[t][j] = zero
            K2[t] = [x + c * y for x, y in zip(K2[t], K2[j])]
    a = []
    for t in range(n):
        d = A[t][t]
        a.append(Padic(p, d.val, 1, cap, cap))
        unit = Padic(p, 0, d.unit, d.prec, cap)
        for row in K1:
            row[t] = row[t] * unit
    k1 = Matrix(field, _to_array(K1))
    k2 = Matrix(field, _to_array(K2))
    D = _padic_identity(n, p, cap)
    for t in range(n):
        D[t, t] = a[t]
        for s in range(n):
            if s != t:
                D[t, s] = zero
    recon = _padic_matmul(_padic_matmul(k1.data, D, p, cap), k2.data, p, cap)
    residual = max(float((recon[i, j] - g.data[i, j]).abs_upper()) for i in range(n) for j in range(n))
    return CartanDecomposition(k1, tuple(a), k2, residual)


def _to_array(rows) -> np.ndarray:
    n = len(rows)
    out = np.empty((n, len(rows[0])), dtype=object)
    for i in range(n):
        for j in range(len(rows[0])):
            out[i, j] = rows[i][j]
    return out


def singular_ratio(g: Matrix, cd: CartanDecomposition | None = None):
    """Pessimistic lower bound for |a_1/a_2|; exactly 1 at (near) ties.

    p-adic ratios are exact powers of p (returned as int).
    """
    if g.n < 2:
        raise DimensionMismatch("singular_ratio needs n >= 2")
    cd = cd or cartan(g)
    if g.is_padic:
        v1, v2 = cd.a[0].val, cd.a[1].val
        return g.field.p ** (v2 - v1)
    s1, s2 = cd.a[0], cd.a[1]
    eta = g.field.eta
    if s1 - s2 <= eta * s1:
        return 1.0
    lo = s1 * (1 - eta) / (s2 * (1 + eta) + 16 * g.n * _MACH * s1)
    return max(1.0, lo)


def random_orthogonal(rng: np.random.Generator, n: int, complex_: bool = False) -> np.ndarray:
    z = rng.standard_normal((n, n))
    if complex_:
        z = z + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
