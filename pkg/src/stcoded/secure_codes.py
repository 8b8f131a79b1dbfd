"""Collusion-resistant shares for the 4-polynomial grid code.

The grids of A and B are extended with ell x ell uniformly random pad
blocks, placed on exponents disjoint from the data terms, so that the
joint view of any <= ell colluding workers is statistically independent of
(A, B).  With ell = 0 the construction reduces exactly — byte-for-byte in
serialized form — to the plain 4-polynomial encoding.

Decoding exploits that every evaluation point is nonzero: x^e depends only
on e mod (q-1), so the product polynomial collapses to one coefficient per
residue class.  The receiver solves the collapsed system from as many
outputs as there are classes and reads off the desired blocks, provided
each desired exponent is alone in its class; otherwise the pad interference
is inseparable and SpecViolation is raised.

`leakage_audit` certifies security by exhaustive enumeration with exact
rational arithmetic: it reports mutual information exactly 0 only when the
joint (source, shares) counts factor exactly.  Pad randomness comes from a
seeded PRNG for reproducibility; production use would need a true RNG.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConfigError,
    DivisibilityViolation,
    InsufficientOutputs,
    OutOfRange,
    ScaleExceeded,
    ShapeMismatch,
    SpecViolation,
)
from .gf_core import FieldSpec, FqMatrix, solve_linear
from .poly_codes import CodeSpec, ShareBundle, WorkerOutput, master_encode

_AUDIT_BUDGET = 1 << 22


@dataclass
class SecureSpec:
    """Parameters of one collusion-resistant job; ell is the collusion
    bound.  N below the secure recovery threshold is permitted at
    construction (leakage audits need no decoding); decoding then fails
    with InsufficientOutputs."""
    q: int
    m_A: int
    m: int
    N: int
    s_r: int = 1
    s_c: int = 1
    ell: int = 0
    seed: int = 0
    points: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        self.field = FieldSpec(self.q)
        if self.ell < 0:
            raise OutOfRange("collusion bound ell must be >= 0")
        if min(self.m_A, self.m, self.s_r, self.s_c, self.N) < 1:
            raise OutOfRange("dimensions must be positive")
        if self.m_A % self.s_r or self.m % self.s_c:
            raise DivisibilityViolation("need s_r | m_A and s_c | m")
        if self.q <= self.N:
            raise ConfigError("need q > N for distinct nonzero points")
        if self.points is None:
            self.points = tuple(range(1, self.N + 1))
        self.points = tuple(int(x) % self.q for x in self.points)
        if (len(self.points) != self.N
                or len(set(self.points)) != self.N or 0 in self.points):
            raise ConfigError("points must be N distinct nonzero residues")

    @property
    def sbar_r(self) -> int:
        return self.s_r + self.ell

    @property
    def sbar_c(self) -> int:
        return self.s_c + self.ell


def secure_threshold(spec: SecureSpec) -> int:
    sc, sr, ell = spec.sbar_c, spec.sbar_r, spec.ell
    return sc * (sc * (2 * sr - 1) - 2 * ell * sr) - ell


def secure_rate(spec: SecureSpec) -> Fraction:
    sc, sr = spec.sbar_c, spec.sbar_r
    return Fraction(secure_threshold(spec),
                    sc * (sc * (2 * sr - 1) - spec.s_r))


# ---------------------------------------------------------------------------
# exponent maps
# ---------------------------------------------------------------------------

def _a_exponents(spec: SecureSpec):
    """(is_pad, j, k, exponent) for every term of the A-side encoding."""
    sc = spec.sbar_c
    terms = [(False, j, k, k + sc * j)
             for j in range(spec.s_r) for k in range(spec.s_c)]
    terms += [(True, j, k, (k + spec.s_c) + sc * (j + spec.s_r))
              for j in range(spec.ell) for k in range(spec.ell)]
    return terms


def _b_exponents(spec: SecureSpec):
    sc, sr = spec.sbar_c, spec.sbar_r
    terms = [(False, j, k, sc * (sr - 1 - j) + sc * (2 * sr - 1) * k)
             for j in range(spec.s_r) for k in range(spec.s_c)]
    # pads sit just below the (k + s_c)-th column rung; this keeps them off
    # every data exponent while letting small-field decoding isolate the
    # desired residue classes
    terms += [(True, j, k, sc * (2 * sr - 1) * (k + spec.s_c) - (1 + j))
              for j in range(spec.ell) for k in range(spec.ell)]
    return terms


def desired_exponents(spec: SecureSpec) -> Dict[Tuple[int, int], int]:
    sc, sr = spec.sbar_c, spec.sbar_r
    return {(k, kp): k + sc * (sr - 1) + sc * (2 * sr - 1) * kp
            for k in range(spec.s_c) for kp in range(spec.s_c)}


def support_exponents(spec: SecureSpec) -> List[int]:
    """Distinct exponents of the product polynomial A~^T B~."""
    ea = {e for *_, e in _a_exponents(spec)}
    eb = {e for *_, e in _b_exponents(spec)}
    return sorted({a + b for a in ea for b in eb})


def decode_classes(spec: SecureSpec) -> Dict[int, List[int]]:
    """Residue classes of the support modulo q-1 (all points nonzero)."""
    classes: Dict[int, List[int]] = {}
    for e in support_exponents(spec):
        classes.setdefault(e % (spec.q - 1), []).append(e)
    return classes


def decode_outputs_required(spec: SecureSpec) -> int:
    return len(decode_classes(spec))


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------

def _pads(spec: SecureSpec, rng: np.random.Generator) -> Tuple[list, list]:
    r, c = spec.m_A // spec.s_r, spec.m // spec.s_c
    draw = lambda: FqMatrix(spec.field, rng.integers(0, spec.q, size=(r, c)))
    ka = [[draw() for _ in range(spec.ell)] for _ in range(spec.ell)]
    kb = [[draw() for _ in range(spec.ell)] for _ in range(spec.ell)]
    return ka, kb


def _blocks(M: FqMatrix, s_r: int, s_c: int):
    r, c = M.shape[0] // s_r, M.shape[1] // s_c
    return [[M.block(j * r, (j + 1) * r, k * c, (k + 1) * c)
             for k in range(s_c)] for j in range(s_r)]


def _encode_side(spec: SecureSpec, data, pads, terms, x: int) -> FqMatrix:
    q = spec.q
    acc = np.zeros((spec.m_A // spec.s_r, spec.m // spec.s_c),
                   dtype=np.int64)
    for is_pad, j, k, e in terms:
        blk = pads[j][k] if is_pad else data[j][k]
        acc = (acc + blk.data.astype(np.int64) * pow(x, e, q)) % q
    return FqMatrix(spec.field, acc)


def secure_encode(spec: SecureSpec, A: FqMatrix,
                  B: FqMatrix) -> List[ShareBundle]:
    """Per-worker 4-polynomial bundles over the padded encodings."""
    if A.shape != (spec.m_A, spec.m) or B.shape != (spec.m_A, spec.m):
        raise ShapeMismatch("A and B must be m_A x m")
    if A.q != spec.q or B.q != spec.q:
        raise ShapeMismatch("inputs live in the wrong field")
    if spec.m_A % (2 * spec.s_r):
        raise DivisibilityViolation("encoding needs 2 s_r | m_A")
    if spec.ell == 0:
        base = CodeSpec("StPolyDotGen", spec.q, spec.m_A, spec.m, spec.N,
                        s_r=spec.s_r, s_c=spec.s_c, points=spec.points)
        return master_encode(base, A, B)
    rng = np.random.default_rng(spec.seed)
    ka, kb = _pads(spec, rng)
    da = _blocks(A, spec.s_r, spec.s_c)
    db = _blocks(B, spec.s_r, spec.s_c)
    ta, tb = _a_exponents(spec), _b_exponents(spec)
    bundles = []
    for i, x in enumerate(spec.points):
        at = _encode_side(spec, da, ka, ta, x)
        bt = _encode_side(spec, db, kb, tb, x)
        h = at.shape[0] // 2
        a1, a2 = at.block(0, h, 0, at.shape[1]), at.block(h, 2 * h, 0, at.shape[1])
        b1, b2 = bt.block(0, h, 0, bt.shape[1]), bt.block(h, 2 * h, 0, bt.shape[1])
        p1 = a1 + b2
        p4 = (a2.T @ a1) + (b2.T @ b1)
        bundles.append(ShareBundle("SecureStPolyDot", spec.q, i, x,
                                   (p1, a2, b1, p4)))
    return bundles


def secure_worker(bundle: ShareBundle) -> WorkerOutput:
    p1, p2, p3, p4 = bundle.polys
    return WorkerOutput(bundle.i, bundle.x_i,
                        (p2.T @ p1) + (p1.T @ p3) - p4)


def secure_decode(spec: SecureSpec,
                  outputs: Sequence[WorkerOutput]) -> FqMatrix:
    """Recover A^T B from the collapsed-coefficient system.

    Requires one output per residue class of the support; raises
    SpecViolation when a desired exponent shares its class with any other
    support exponent (the pad interference is then inseparable at this q).
    """
    classes = decode_classes(spec)
    desired = desired_exponents(spec)
    for (k, kp), e in desired.items():
        if classes[e % (spec.q - 1)] != [e]:
            raise SpecViolation(
                f"desired exponent {e} shares residue class "
                f"{classes[e % (spec.q - 1)]} mod {spec.q - 1}")
    need = len(classes)
    xs = [o.x_i for o in outputs]
    if len(set(xs)) != len(xs):
        raise InsufficientOutputs("repeated worker evaluation point")
    if len(outputs) < need:
        raise InsufficientOutputs(f"{len(outputs)} outputs < {need} classes")
    chosen = list(outputs)[:need]
    xs = [o.x_i for o in chosen]
    reps = sorted(classes)
    f = spec.field
    V = FqMatrix(f, np.array([[pow(x, r, spec.q) for r in reps]
                              for x in xs], dtype=np.int64))
    wc = spec.m // spec.s_c
    rhs = FqMatrix(f, np.stack([o.value.data.reshape(-1) for o in chosen]))
    sol = solve_linear(f, V, rhs)      # one coefficient row per class
    out = np.zeros((spec.m, spec.m), dtype=np.int64)
    for (k, kp), e in desired.items():
        row = reps.index(e % (spec.q - 1))
        out[k * wc:(k + 1) * wc, kp * wc:(kp + 1) * wc] = \
            sol.data[row].reshape(wc, wc)
    return FqMatrix(f, out)


# ---------------------------------------------------------------------------
# leakage audit
# ---------------------------------------------------------------------------

@dataclass
class AuditRow:
    ell: int
    set: str
    q: int
    m_A: int
    m: int
    mi_bits: object        # Fraction(0) when exactly independent, else float
    is_zero: bool

    CSV_FIELDS = ("ell", "set", "q", "m_A", "m",
                  "mi_bits_numerator", "mi_bits_is_zero")

    def as_row(self):
        return [self.ell, self.set, self.q, self.m_A, self.m,
                str(self.mi_bits), self.is_zero]


def leakage_audit(spec: SecureSpec, set_size: int) -> List[AuditRow]:
    """Exact mutual information I(A, B; shares at L) for every collusion
    set L of the given size, by exhaustive enumeration of sources and pads.

    Restricted to unit blocks (m_A = s_r, m = s_c) so each grid entry is a
    single field element.  Independence is certified with integer counts:
    mi_bits is Fraction(0) only when the joint distribution factors
    exactly; otherwise the float MI in bits is reported.
    """
    if spec.m_A != spec.s_r or spec.m != spec.s_c:
        raise ConfigError("audit requires unit blocks (m_A=s_r, m=s_c)")
    if not 1 <= set_size <= spec.N:
        raise OutOfRange(f"collusion set size {set_size}")
    q = spec.q
    n_src = 2 * spec.s_r * spec.s_c
    n_pad = 2 * spec.ell * spec.ell
    if q ** (n_src + n_pad) > _AUDIT_BUDGET:
        raise ScaleExceeded(f"{q}^{n_src + n_pad} audit worlds")
    ta, tb = _a_exponents(spec), _b_exponents(spec)
    n_a = spec.s_r * spec.s_c

    # share value of one worker: (A~_i, B~_i) as a pair of field scalars
    def shares_at(x, a_vals, b_vals, ka_vals, kb_vals):
        av = sum((ka_vals[j * spec.ell + k] if is_pad
                  else a_vals[j * spec.s_c + k]) * pow(x, e, q)
                 for is_pad, j, k, e in ta) % q
        bv = sum((kb_vals[j * spec.ell + k] if is_pad
                  else b_vals[j * spec.s_c + k]) * pow(x, e, q)
                 for is_pad, j, k, e in tb) % q
        return av, bv

    rows = []
    for subset in itertools.combinations(range(spec.N), set_size):
        pts = [spec.points[i] for i in subset]
        joint: Dict[tuple, int] = {}
        src_ct: Dict[tuple, int] = {}
        shr_ct: Dict[tuple, int] = {}
        total = 0
        for world in itertools.product(range(q), repeat=n_src + n_pad):
            a_vals = world[:n_a]
            b_vals = world[n_a:n_src]
            ka_vals = world[n_src:n_src + spec.ell ** 2]
            kb_vals = world[n_src + spec.ell ** 2:]
            src = world[:n_src]
            shr = tuple(shares_at(x, a_vals, b_vals, ka_vals, kb_vals)
                        for x in pts)
            joint[(src, shr)] = joint.get((src, shr), 0) + 1
            src_ct[src] = src_ct.get(src, 0) + 1
            shr_ct[shr] = shr_ct.get(shr, 0) + 1
            total += 1
        independent = all(cnt * total == src_ct[s] * shr_ct[v]
                          for (s, v), cnt in joint.items())
        if independent:
            mi = Fraction(0)
        else:
            mi = sum(cnt / total
                     * math.log2(cnt * total / (src_ct[s] * shr_ct[v]))
                     for (s, v), cnt in joint.items())
        rows.append(AuditRow(spec.ell, ",".join(map(str, subset)), q,
                             spec.m_A, spec.m, mi, independent))
    return rows
