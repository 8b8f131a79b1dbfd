"""Structured two-source message mappings for distributed matrix products.

Each scheme maps a pair of private inputs (A, B) over F_q to a small set of
modulo-sum messages from which a receiver recovers f(A, B) = A^T B (or the
inner product / matrix-vector special cases) without learning the inputs
beyond what the messages reveal.

Conventions: inputs are m x l matrices (column vectors are m x 1), and the
half splits act on rows.  For odd m the inner-product schemes use the
padded/overlapping split (A gets a zero row appended to its top half, B's
halves share the middle row), which preserves A1^T B1 + A2^T B2 = A^T B.
Matrix schemes that split rows require even m; the nested pairwise scheme
requires 4 | m.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Dict, Tuple

import numpy as np

from .errors import (
    DivisibilityViolation,
    EvenFieldDivision,
    InconsistentOffDiagonals,
    LengthMismatch,
    NoConsistentK,
    OutOfRange,
    ShapeMismatch,
    UnknownScheme,
)
from .gf_core import FieldSpec, FqMatrix


# ---------------------------------------------------------------------------
# splits
# ---------------------------------------------------------------------------

def split_halves(A: FqMatrix, B: FqMatrix):
    """Row-split both inputs into (A1, A2, B1, B2) with A1^T B1 + A2^T B2 = A^T B.

    Even m: plain top/bottom halves.  Odd m: A1 = [top rows; 0], A2 = bottom
    ceil(m/2) rows, B1 = top ceil(m/2) rows, B2 = bottom ceil(m/2) rows
    (B's halves overlap on the middle row, which meets A1's zero pad).
    """
    if A.shape[0] != B.shape[0]:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    m = A.shape[0]
    f = A.field
    if m % 2 == 0:
        h = m // 2
        return (A.block(0, h, 0, A.shape[1]), A.block(h, m, 0, A.shape[1]),
                B.block(0, h, 0, B.shape[1]), B.block(h, m, 0, B.shape[1]))
    h = (m + 1) // 2
    pad = np.zeros((1, A.shape[1]), dtype=np.uint64)
    a1 = FqMatrix(f, np.vstack([A.data[: h - 1], pad]))
    a2 = A.block(h - 1, m, 0, A.shape[1])
    b1 = B.block(0, h, 0, B.shape[1])
    b2 = B.block(h - 1, m, 0, B.shape[1])
    return a1, a2, b1, b2


def _require_even(m: int, what: str, mod: int = 2):
    if m % mod:
        raise DivisibilityViolation(f"{what} requires {mod} | m, got m={m}")


def _col(X: FqMatrix, j: int) -> FqMatrix:
    return X.block(0, X.shape[0], j, j + 1)


# ---------------------------------------------------------------------------
# message containers
# ---------------------------------------------------------------------------

@dataclass
class DotMessages:
    q: int
    m: int
    U: FqMatrix
    V: FqMatrix
    W: int


@dataclass
class MatrixMessages:
    """Messages for the matrix-output schemes; `variant` selects the decoder."""
    variant: str
    q: int
    m: int
    l: int
    U: FqMatrix = None
    V: FqMatrix = None
    W: FqMatrix = None
    extra: dict = dc_field(default_factory=dict)


@dataclass
class RecursiveMessages:
    variant: str  # "general" | "symmetric" | "nested"
    q: int
    m: int
    l: int
    diag: dict = dc_field(default_factory=dict)
    pairs: dict = dc_field(default_factory=dict)


# ---------------------------------------------------------------------------
# inner product (vector) schemes
# ---------------------------------------------------------------------------

def dot_messages(A: FqMatrix, B: FqMatrix) -> DotMessages:
    """Three-message mapping for the inner product <A, B> over F_q."""
    if A.shape[1] != 1 or B.shape[1] != 1:
        raise ShapeMismatch("dot scheme takes column vectors")
    a1, a2, b1, b2 = split_halves(A, B)
    U = a2 + b1
    V = a1 + b2
    W = ((a2.T @ a1) + (b1.T @ b2)).item()
    return DotMessages(A.q, A.shape[0], U, V, W)


def dot_decode(msgs: DotMessages) -> int:
    return ((msgs.U.T @ msgs.V).item() - msgs.W) % msgs.q


def embed_modulus(m: int, q: int) -> int:
    """Integer-embedding modulus r for the two-message inner-product scheme."""
    if q == 2:
        return 3 if m == 1 else 2 * m + (m % 2)
    return 2 * (q - 1) * m + (m % 2)


def embed_dot_messages(A: FqMatrix, B: FqMatrix):
    """Two-message embedded-sum mapping: per-entry sums mod r plus one
    aggregate; returns (sums_r, power_sum, m, q)."""
    if A.shape[1] != 1 or B.shape[1] != 1:
        raise ShapeMismatch("embed scheme takes column vectors")
    m, q = A.shape[0], A.q
    r = embed_modulus(m, q)
    a = A.data[:, 0].astype(int)
    b = B.data[:, 0].astype(int)
    if q == 2:
        if m == 1:
            return [int((a[0] + b[0]) % 3)], 0, m, q
        sums = [int((ai + bi) % 2) for ai, bi in zip(a, b)]
        power = int(sum(int(ai) + int(bi) for ai, bi in zip(a, b)) % r)
        return sums, power, m, q
    sums = [int((ai + bi) % r) for ai, bi in zip(a, b)]
    power = int(sum(int(ai) ** 2 + int(bi) ** 2 for ai, bi in zip(a, b)) % q)
    return sums, power, m, q


def embed_dot_decode(sums_r, power_sum: int, m: int, q: int) -> int:
    """Recover <A, B> mod q from the embedded-sum messages.

    Raises NoConsistentK if no input pair can produce the messages.
    """
    f = FieldSpec(q)
    r = embed_modulus(m, q)
    if len(sums_r) != m:
        raise LengthMismatch(f"expected {m} sums, got {len(sums_r)}")
    if q == 2:
        if m == 1:
            t = sums_r[0] % r
            if t not in (0, 1, 2):
                raise NoConsistentK(f"message {t} outside image")
            return 1 if t == 2 else 0
        s = sum(x % 2 for x in sums_r)
        diff = (power_sum - s) % r
        if diff % 2:
            raise NoConsistentK("parity mismatch between messages")
        return (diff // 2) % 2
    hi = 2 * (q - 1)
    ts = [x % r for x in sums_r]
    if any(t > hi for t in ts):
        raise NoConsistentK(f"entry sum above {hi} is not producible")
    s = (sum(t * t for t in ts) - power_sum) % q
    return f.mul(s, f.inv2)


# ---------------------------------------------------------------------------
# matrix-vector and matrix-product schemes
# ---------------------------------------------------------------------------

def matvec_messages(A: FqMatrix, b: FqMatrix) -> MatrixMessages:
    """Messages for A^T b with A in F_q^{m x l}, b in F_q^{m x 1}; even m."""
    if b.shape[1] != 1:
        raise ShapeMismatch("matvec takes a column vector b")
    m, l = A.shape
    _require_even(m, "matvec scheme")
    a1, a2, b1, b2 = split_halves(A, b)
    ones_row = FqMatrix(A.field, np.ones((1, l), dtype=np.uint64))
    ones_col = ones_row.T
    U = a2 + (b1 @ ones_row)
    V = a1 + (b2 @ ones_row)
    W = (a2.T @ a1) + (ones_col @ (b1.T @ b2) @ ones_row)
    return MatrixMessages("matvec", A.q, m, l, U, V, W)


def matvec_decode(msgs: MatrixMessages) -> FqMatrix:
    """diag(U^T V - W), i.e. A^T b as an l x 1 vector."""
    if msgs.variant != "matvec":
        raise UnknownScheme(msgs.variant)
    M = (msgs.U.T @ msgs.V) - msgs.W
    return FqMatrix(msgs.U.field, np.diag(M.data).copy().reshape(-1, 1))


def symmetric_messages(A: FqMatrix, B: FqMatrix, variant: str = "cross") -> MatrixMessages:
    """Messages for a symmetric product A^T B (= B^T A required for recovery).

    variant "cross": W carries A2^T A1 + B1^T B2 and the decoder symmetrizes
    the corrected product.  variant "symmetrized": W carries both transposed
    cross terms and the decoder averages U^T V with V^T U.  Both need odd q.
    """
    if A.shape != B.shape:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    m, l = A.shape
    _require_even(m, "symmetric scheme")
    a1, a2, b1, b2 = split_halves(A, B)
    U = a2 + b1
    V = a1 + b2
    if variant == "cross":
        W = (a2.T @ a1) + (b1.T @ b2)
    elif variant == "symmetrized":
        W = (a2.T @ a1) + (a1.T @ a2) + (b1.T @ b2) + (b2.T @ b1)
    else:
        raise UnknownScheme(variant)
    return MatrixMessages(variant, A.q, m, l, U, V, W)


def symmetric_decode(msgs: MatrixMessages) -> FqMatrix:
    f = msgs.U.field
    if f.q == 2:
        raise EvenFieldDivision("symmetric decoders divide by 2")
    if msgs.variant == "cross":
        M = (msgs.U.T @ msgs.V) - msgs.W
        return f.halve(M + M.T)
    if msgs.variant == "symmetrized":
        M = (msgs.U.T @ msgs.V) + (msgs.V.T @ msgs.U) - msgs.W
        return f.halve(M)
    raise UnknownScheme(msgs.variant)


def square_embed_messages(A: FqMatrix, B: FqMatrix) -> MatrixMessages:
    """Per-column rank-one embedding for A^T B; any m, odd q."""
    if A.shape != B.shape:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    m, l = A.shape
    if A.q == 2:
        raise EvenFieldDivision("square embedding divides by 2")
    ones_row = FqMatrix(A.field, np.ones((1, l), dtype=np.uint64))
    gram = A.T @ A
    firsts, seconds = [], []
    for j in range(l):
        Bt = _col(B, j) @ ones_row
        firsts.append(A + Bt)
        seconds.append(gram + (Bt.T @ Bt))
    return MatrixMessages("square_embed", A.q, m, l,
                          extra={"firsts": firsts, "seconds": seconds})


def square_embed_decode(msgs: MatrixMessages) -> FqMatrix:
    """Recover A^T B column by column; cross-validates the off-diagonals."""
    if msgs.variant != "square_embed":
        raise UnknownScheme(msgs.variant)
    firsts, seconds = msgs.extra["firsts"], msgs.extra["seconds"]
    f = firsts[0].field
    q, l = f.q, msgs.l
    inv2 = f.inv2
    out = np.zeros((l, l), dtype=np.uint64)
    for j in range(l):
        M = (firsts[j].T @ firsts[j]) - seconds[j]
        d = (np.diag(M.data).astype(np.int64) * inv2) % q
        expect = (d[:, None] + d[None, :]) % q
        if not np.array_equal(expect, M.data.astype(np.int64) % q):
            raise InconsistentOffDiagonals(f"column {j} fails cross-check")
        out[:, j] = d
    return FqMatrix(f, out)


def square_ah_messages(A: FqMatrix, B: FqMatrix):
    """Four-message mapping (A1, B2, U, W) recovering A^T B for any q.

    No symmetry of the product is required; even m.
    """
    if A.shape != B.shape:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    _require_even(A.shape[0], "square-ah scheme")
    a1, a2, b1, b2 = split_halves(A, B)
    U = a2 + b1
    W = (a1.T @ a2) + (b1.T @ b2)
    return a1, b2, U, W


def square_ah_decode(a1: FqMatrix, b2: FqMatrix, U: FqMatrix, W: FqMatrix) -> FqMatrix:
    return (a1.T @ U) + (U.T @ b2) - W


# ---------------------------------------------------------------------------
# pairwise (recursive) schemes
# ---------------------------------------------------------------------------

def _pair_split(A: FqMatrix, B: FqMatrix):
    a1, a2, b1, b2 = split_halves(A, B)
    return a1, a2, b1, b2


def _vdot(x: np.ndarray, y: np.ndarray, q: int) -> int:
    """<x, y> mod q for 1-D vectors of residues; chunked against overflow."""
    per = max((q - 1) * (q - 1), 1)
    chunk = max(1, (1 << 62) // per)
    n = x.shape[0]
    if n <= chunk:
        return int((x @ y) % q)
    s = 0
    for lo in range(0, n, chunk):
        s = (s + int(x[lo:lo + chunk] @ y[lo:lo + chunk])) % q
    return s


def recursive_messages(A: FqMatrix, B: FqMatrix) -> RecursiveMessages:
    """Upper-triangular message set for the full product A^T B; any q, even m.

    Lower-triangle messages are linear in the transmitted ones:
    X_ij = (X_ii + X_jj) - X_ji for X in {U, V, W}.
    """
    if A.shape != B.shape:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    m, l = A.shape
    _require_even(m, "recursive scheme")
    f, q = A.field, A.q
    a1, a2, b1, b2 = (x.data for x in _pair_split(A, B))
    pairs = {}
    for i in range(l):
        ai1, ai2 = a1[:, i], a2[:, i]
        wa = _vdot(ai2, ai1, q)
        for j in range(i, l):
            U = (ai2 + b1[:, j]) % q
            V = (ai1 + b2[:, j]) % q
            W = (wa + _vdot(b1[:, j], b2[:, j], q)) % q
            pairs[(i, j)] = (FqMatrix._wrap(f, U.reshape(-1, 1)),
                             FqMatrix._wrap(f, V.reshape(-1, 1)), W)
    return RecursiveMessages("general", q, m, l, pairs=pairs)


def recursive_sym_messages(A: FqMatrix, B: FqMatrix) -> RecursiveMessages:
    """Diagonal triples plus off-diagonal (U, V) pairs; symmetric products, odd q."""
    if A.shape != B.shape:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    m, l = A.shape
    _require_even(m, "recursive symmetric scheme")
    if A.q == 2:
        raise EvenFieldDivision("symmetric pairwise decode divides by 2")
    f, q = A.field, A.q
    a1, a2, b1, b2 = (x.data for x in _pair_split(A, B))
    col = lambda v: FqMatrix._wrap(f, v.reshape(-1, 1))
    diag, pairs = {}, {}
    for i in range(l):
        U = (a2[:, i] + b1[:, i]) % q
        V = (a1[:, i] + b2[:, i]) % q
        W = (_vdot(a2[:, i], a1[:, i], q)
             + _vdot(b1[:, i], b2[:, i], q)) % q
        diag[i] = (col(U), col(V), W)
    for i in range(l):
        for j in range(i + 1, l):
            pairs[(i, j)] = (col((a2[:, i] + b1[:, j]) % q),
                             col((a1[:, i] + b2[:, j]) % q))
    return RecursiveMessages("symmetric", q, m, l, diag=diag, pairs=pairs)


def nested_messages(A: FqMatrix, B: FqMatrix) -> RecursiveMessages:
    """Diagonal triples plus quarter-length off-diagonal items; 4 | m, odd q."""
    if A.shape != B.shape:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    m, l = A.shape
    _require_even(m, "nested scheme", mod=4)
    if A.q == 2:
        raise EvenFieldDivision("nested decode divides by 2 and 4")
    f, q = A.field, A.q
    inv2 = f.inv2
    hh = m // 4
    a1, a2, b1, b2 = (x.data.astype(np.int64) for x in _pair_split(A, B))
    col = lambda v: FqMatrix._wrap(f, (v % q).astype(np.uint64)
                                   .reshape(-1, 1))
    diag, raw = {}, {}
    for i in range(l):
        u = (a2[:, i] + b1[:, i]) % q
        v = (a1[:, i] + b2[:, i]) % q
        w = (_vdot(a2[:, i], a1[:, i], q)
             + _vdot(b1[:, i], b2[:, i], q)) % q
        raw[i] = (u, v)
        diag[i] = (col(u), col(v), w)
    pairs = {}
    for i in range(l):
        for j in range(i + 1, l):
            uij = (a2[:, i] + b1[:, j]) % q
            vij = (a1[:, i] + b2[:, j]) % q
            su, sv = (raw[i][0] + raw[j][0]) % q, (raw[i][1] + raw[j][1]) % q
            u_lo, u_hi = uij[:hh], uij[hh:]
            v_lo, v_hi = vij[:hh], vij[hh:]
            alpha = np.concatenate([su[hh:], su[:hh]]) * inv2 % q
            beta = np.concatenate([sv[hh:], sv[:hh]]) * inv2 % q
            it3 = (_vdot(u_hi, u_lo, q) + _vdot(v_lo, v_hi, q)
                   - _vdot(alpha, uij, q) - _vdot(beta, vij, q)) % q
            pairs[(i, j)] = (col(u_hi + v_lo), col(u_lo + v_hi), it3)
    return RecursiveMessages("nested", q, m, l, diag=diag, pairs=pairs)


def recursive_decode(msgs: RecursiveMessages) -> FqMatrix:
    """Decode any of the pairwise message sets into the l x l product."""
    q = msgs.q
    f = FieldSpec(q)
    l = msgs.l
    out = np.zeros((l, l), dtype=np.uint64)

    if msgs.variant == "general":
        raw = {k: (u.data[:, 0], v.data[:, 0], w)
               for k, (u, v, w) in msgs.pairs.items()}
        for i in range(l):
            for j in range(l):
                if (i, j) in raw:
                    u, v, w = raw[(i, j)]
                else:
                    ui, vi, wi = raw[(i, i)]
                    uj, vj, wj = raw[(j, j)]
                    uji, vji, wji = raw[(j, i)]
                    u = (ui + uj + (q - uji)) % q
                    v = (vi + vj + (q - vji)) % q
                    w = (wi + wj - wji) % q
                out[i, j] = (_vdot(u, v, q) - w) % q
        return FqMatrix(f, out)

    if msgs.variant == "symmetric":
        inv2 = f.inv2
        diag = {k: (u.data[:, 0], v.data[:, 0], w)
                for k, (u, v, w) in msgs.diag.items()}
        for i, (u, v, w) in diag.items():
            out[i, i] = (_vdot(u, v, q) - w) % q
        for (i, j), (Uij, Vij) in msgs.pairs.items():
            uij, vij = Uij.data[:, 0], Vij.data[:, 0]
            ui, vi, wi = diag[i]
            uj, vj, wj = diag[j]
            su, sv, sw = (ui + uj) % q, (vi + vj) % q, (wi + wj) % q
            t = (_vdot(su, sv, q) - sw + 2 * _vdot(uij, vij, q)
                 - _vdot(uij, sv, q) - _vdot(su, vij, q)) % q
            out[i, j] = out[j, i] = (t * inv2) % q
        return FqMatrix(f, out)

    if msgs.variant == "nested":
        inv2 = f.inv2
        inv4 = (inv2 * inv2) % q
        hh = msgs.m // 4
        diag = {k: (u.data[:, 0].astype(np.int64),
                    v.data[:, 0].astype(np.int64), w)
                for k, (u, v, w) in msgs.diag.items()}
        for i, (u, v, w) in diag.items():
            out[i, i] = (_vdot(u, v, q) - w) % q
        for (i, j), (it1, it2, it3) in msgs.pairs.items():
            ui, vi, wi = diag[i]
            uj, vj, wj = diag[j]
            su, sv = (ui + uj) % q, (vi + vj) % q
            su_lo, su_hi = su[:hh], su[hh:]
            sv_lo, sv_hi = sv[:hh], sv[hh:]
            r1 = (it1.data[:, 0].astype(np.int64)
                  - (inv2 * su_hi) % q - (inv2 * sv_lo) % q) % q
            r2 = (it2.data[:, 0].astype(np.int64)
                  - (inv2 * su_lo) % q - (inv2 * sv_hi) % q) % q
            r3 = (it3 + inv4 * (_vdot(su_hi, su_lo, q)
                                + _vdot(sv_lo, sv_hi, q))) % q
            ubar_vbar = (_vdot(r1, r2, q) - r3) % q
            sw = (wi + wj) % q
            d = (ubar_vbar + inv4 * _vdot(su, sv, q) - inv2 * sw) % q
            out[i, j] = out[j, i] = d
        return FqMatrix(f, out)

    raise UnknownScheme(msgs.variant)
