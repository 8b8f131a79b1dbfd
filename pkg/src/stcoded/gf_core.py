"""Prime-field arithmetic and exact linear algebra over F_q.

Matrices are stored as numpy uint64 arrays of canonical residues in [0, q).
Products are accumulated in chunks along the contraction axis so that partial
sums never overflow 64 bits for any prime q < 2**31.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DuplicatePoint,
    EvenFieldDivision,
    FieldMismatch,
    InverseOfZero,
    NoSolution,
    OutOfRange,
    ShapeMismatch,
    SingularMatrix,
)

_MAX_Q = 2**31


def is_prime(n: int) -> bool:
    """Deterministic trial division; fine for q < 2**31."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """A prime field F_q, q prime and < 2**31."""

    q: int

    def __post_init__(self):
        if not (2 <= self.q < _MAX_Q):
            raise OutOfRange(f"field size {self.q} outside [2, 2**31)")
        if not is_prime(self.q):
            raise OutOfRange(f"field size {self.q} is not prime")

    # scalar ops -----------------------------------------------------------
    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise InverseOfZero("0 has no multiplicative inverse")
        return pow(a, self.q - 2, self.q)

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    @property
    def inv2(self) -> int:
        if self.q == 2:
            raise EvenFieldDivision("1/2 does not exist over F_2")
        return (self.q + 1) // 2

    def halve(self, a):
        """a/2, elementwise if a is an array; q must be odd."""
        if self.q == 2:
            raise EvenFieldDivision("1/2 does not exist over F_2")
        if isinstance(a, FqMatrix):
            return a.scale(self.inv2)
        return self.mul(a, self.inv2)

    # array helpers --------------------------------------------------------
    def residues(self, data) -> np.ndarray:
        arr = np.asarray(data)
        if not np.issubdtype(arr.dtype, np.integer):
            raise ShapeMismatch("field elements must be integers")
        return np.mod(arr, self.q).astype(np.uint64)


def field_arith(q: int, a: int, b: int, op: str) -> int:
    """Scalar field op dispatch ('add'|'sub'|'mul'|'div'|'inv'|'neg')."""
    f = FieldSpec(q)
    if op == "inv":
        return f.inv(a)
    if op == "neg":
        return f.neg(a)
    try:
        return getattr(f, op)(a, b)
    except AttributeError:
        raise OutOfRange(f"unknown op {op!r}") from None


def _matmul_mod(x: np.ndarray, y: np.ndarray, q: int) -> np.ndarray:
    """x @ y mod q with overflow-safe chunking along the inner axis."""
    # each product term is at most (q-1)^2; chunk so partial sums stay < 2**63
    per_term = (q - 1) * (q - 1)
    chunk = max(1, (1 << 63) // max(per_term, 1))
    k = x.shape[-1]
    if k <= chunk:
        return np.mod(x @ y, q)
    acc = np.zeros((x.shape[0], y.shape[1]), dtype=np.uint64)
    for lo in range(0, k, chunk):
        acc = np.mod(acc + x[:, lo:lo + chunk] @ y[lo:lo + chunk, :], q)
    return acc


class FqMatrix:
    """Dense matrix over F_q. Thin immutable-ish wrapper around uint64 data."""

    __slots__ = ("field", "data")

    def __init__(self, field: FieldSpec, data):
        self.field = field
        arr = field.residues(data)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ShapeMismatch(f"expected 2-D data, got ndim={arr.ndim}")
        arr.setflags(write=False)
        self.data = arr

    # constructors ---------------------------------------------------------
    @classmethod
    def _wrap(cls, field: FieldSpec, arr: np.ndarray) -> "FqMatrix":
        """Internal: adopt an array already holding canonical uint64
        residues, skipping validation (operator results only)."""
        m = object.__new__(cls)
        m.field = field
        arr.setflags(write=False)
        m.data = arr
        return m

    @classmethod
    def zeros(cls, field: FieldSpec, rows: int, cols: int) -> "FqMatrix":
        return cls(field, np.zeros((rows, cols), dtype=np.uint64))

    @classmethod
    def eye(cls, field: FieldSpec, n: int) -> "FqMatrix":
        return cls(field, np.eye(n, dtype=np.uint64))

    @classmethod
    def random(cls, field: FieldSpec, rows: int, cols: int,
               rng: np.random.Generator) -> "FqMatrix":
        return cls(field, rng.integers(0, field.q, size=(rows, cols)))

    # basics ---------------------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def q(self) -> int:
        return self.field.q

    def _check(self, other: "FqMatrix"):
        if not isinstance(other, FqMatrix):
            raise ShapeMismatch("expected an FqMatrix operand")
        if self.field.q != other.field.q:
            raise FieldMismatch(f"F_{self.q} vs F_{other.q}")

    def __eq__(self, other):
        if not isinstance(other, FqMatrix):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.q, self.data.tobytes(), self.shape))

    def __repr__(self):
        return f"FqMatrix(q={self.q}, {self.data.tolist()})"

    # arithmetic -----------------------------------------------------------
    def __add__(self, other: "FqMatrix") -> "FqMatrix":
        self._check(other)
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} + {other.shape}")
        return FqMatrix._wrap(self.field,
                              np.mod(self.data + other.data, self.q))

    def __sub__(self, other: "FqMatrix") -> "FqMatrix":
        self._check(other)
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} - {other.shape}")
        return FqMatrix._wrap(
            self.field, np.mod(self.data + (self.q - other.data), self.q))

    def __neg__(self) -> "FqMatrix":
        return FqMatrix._wrap(self.field, np.mod(self.q - self.data, self.q))

    def __matmul__(self, other: "FqMatrix") -> "FqMatrix":
        self._check(other)
        if self.shape[1] != other.shape[0]:
            raise ShapeMismatch(f"{self.shape} @ {other.shape}")
        return FqMatrix._wrap(self.field,
                              _matmul_mod(self.data, other.data, self.q))

    def scale(self, c: int) -> "FqMatrix":
        c %= self.q
        return FqMatrix._wrap(self.field,
                              np.mod(self.data * np.uint64(c), self.q))

    @property
    def T(self) -> "FqMatrix":
        return FqMatrix._wrap(self.field, self.data.T.copy())

    # views ----------------------------------------------------------------
    def block(self, r0: int, r1: int, c0: int, c1: int) -> "FqMatrix":
        return FqMatrix._wrap(self.field, self.data[r0:r1, c0:c1].copy())

    def hstack(self, other: "FqMatrix") -> "FqMatrix":
        self._check(other)
        return FqMatrix._wrap(self.field,
                              np.hstack([self.data, other.data]))

    def item(self) -> int:
        if self.shape != (1, 1):
            raise ShapeMismatch(f"item() on shape {self.shape}")
        return int(self.data[0, 0])

    def is_symmetric(self) -> bool:
        return np.array_equal(self.data, self.data.T)


def mat_mul(x: FqMatrix, y: FqMatrix) -> FqMatrix:
    return x @ y


def solve_linear(field: FieldSpec, a: FqMatrix, b: FqMatrix) -> FqMatrix:
    """Solve a x = b over F_q by Gaussian elimination.

    Pivot rule: first nonzero entry in the current column (top-down).
    Raises SingularMatrix for rank-deficient square systems and NoSolution
    for inconsistent ones.
    """
    q = field.q
    m, n = a.shape
    if b.shape[0] != m:
        raise ShapeMismatch(f"{a.shape} vs rhs {b.shape}")
    aug = np.hstack([a.data.astype(np.int64), b.data.astype(np.int64)])
    nrhs = b.shape[1]
    pivots = []
    row = 0
    for col in range(n):
        sub = aug[row:, col]
        nz = np.nonzero(sub % q)[0]
        if nz.size == 0:
            continue
        piv = row + int(nz[0])
        if piv != row:
            aug[[row, piv]] = aug[[piv, row]]
        inv = pow(int(aug[row, col]) % q, q - 2, q)
        aug[row] = (aug[row] * inv) % q
        for r in range(m):
            if r != row and aug[r, col] % q:
                aug[r] = (aug[r] - aug[r, col] * aug[row]) % q
        pivots.append(col)
        row += 1
        if row == m:
            break
    # consistency of zero rows
    for r in range(row, m):
        if np.any(aug[r, n:] % q):
            raise NoSolution("inconsistent linear system")
    if len(pivots) < n:
        if m == n:
            raise SingularMatrix(f"rank {len(pivots)} < {n}")
        raise SingularMatrix("underdetermined system")
    x = np.zeros((n, nrhs), dtype=np.int64)
    for r, col in enumerate(pivots):
        x[col] = aug[r, n:]
    return FqMatrix(field, x)


@lru_cache(maxsize=4096)
def _lagrange_cached(q: int, points: tuple, k: int) -> tuple:
    field = FieldSpec(q)
    n = len(points)
    if len(set(points)) != n:
        raise DuplicatePoint(f"repeated node in {points}")
    if not 0 <= k < n:
        raise OutOfRange(f"coefficient index {k} outside [0, {n})")
    # P(x) = prod (x - x_j), coefficients low-to-high
    full = [1] + [0] * n
    for xj in points:
        neg = (-xj) % q
        new = [0] * (n + 1)
        for d in range(n):
            if full[d]:
                new[d] = (new[d] + full[d] * neg) % q
                new[d + 1] = (new[d + 1] + full[d]) % q
        full = new
    coeffs = []
    for xj in points:
        # synthetic division of P by (x - x_j): quotient has degree n-1
        quot = [0] * n
        carry = full[n]
        for d in range(n - 1, -1, -1):
            quot[d] = carry
            carry = (full[d] + carry * xj) % q
        denom = 1
        for xi in points:
            if xi != xj:
                denom = (denom * (xj - xi)) % q
        coeffs.append((quot[k] * field.inv(denom)) % q)
    return tuple(coeffs)


def lagrange_coeffs(field: FieldSpec, points, k: int):
    """Weights c_j with: coeff of x^k of the interpolant = sum_j c_j y_j.

    Built from the basis polynomials L_j via synthetic division of
    P(x) = prod_j (x - x_j); O(n^2) total.
    """
    pts = tuple(int(x) % field.q for x in points)
    return list(_lagrange_cached(field.q, pts, k))


def interpolate_coeff(field: FieldSpec, points, values, k: int):
    """Coefficient of x^k of the interpolating polynomial.

    `values` may be scalars or same-shape FqMatrix evaluations.
    """
    cs = lagrange_coeffs(field, points, k)
    if isinstance(values[0], FqMatrix):
        acc = FqMatrix.zeros(field, *values[0].shape)
        for c, v in zip(cs, values):
            if c:
                acc = acc + v.scale(c)
        return acc
    return sum(c * int(v) for c, v in zip(cs, values)) % field.q
