"""Polynomial evaluation codes for straggler-tolerant distributed A^T B.

Seven code families over a common master/worker/receiver pipeline:

  Poly          column blocks, scalar worker outputs
  StPoly        Poly layout with halved master messages (3 polynomials)
  MatDot        inner-dimension blocks, matrix outputs
  StMatDot      MatDot layout, halved messages (needs A^T B = B^T A, odd q)
  PolyDot       full (s_r x s_c) block grid
  StPolyDotSym  PolyDot layout, 3 polynomials (needs A^T B = B^T A, odd q)
  StPolyDotGen  PolyDot layout, 4 polynomials (any q, any inputs)

Worker i evaluates at x_i (default x_i = i, i in 1..N); any
recovery_threshold distinct outputs decode via Lagrange coefficient
extraction.  Every stage optionally accumulates operation counts into a
CostReport; the counting conventions are chosen once and documented on
`CostReport`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    AsymmetryDetected,
    ConfigError,
    DuplicateEvaluationPoint,
    EvenFieldDivision,
    InsufficientOutputs,
    MalformedBundle,
    OutOfRange,
    ShapeMismatch,
    UnknownScheme,
)
from .gf_core import FieldSpec, FqMatrix, lagrange_coeffs

FAMILIES = ("Poly", "StPoly", "MatDot", "StMatDot", "PolyDot",
            "StPolyDotSym", "StPolyDotGen")
_GRID_FAMILIES = ("PolyDot", "StPolyDotSym", "StPolyDotGen")
_SYMMETRIZING = ("StMatDot", "StPolyDotSym")


@dataclass
class CostReport:
    """Operation counters for one coded run (field elements / mult-adds).

    Conventions: one multiply-accumulate or add costs 1; worker_storage and
    master_comm count the field elements actually shipped; worker_comm and
    the linear part of receiver_comp count threshold x output-size (the
    receiver consumes exactly the outputs it needs); receiver_comp includes
    the cubic interpolation-matrix term threshold^3; receiver-side
    symmetrization of the St* families is not counted; Poly/StPoly masters
    hold source plus column-staging buffers (2x storage).
    """
    family: str = ""
    threshold: int = 0
    master_storage: int = 0
    master_comp: int = 0
    master_comm: int = 0
    worker_storage: int = 0
    worker_comp: int = 0
    worker_comm: int = 0
    receiver_comp: int = 0
    success: bool = True

    def add(self, **kw):
        for k, v in kw.items():
            setattr(self, k, getattr(self, k) + int(v))

    def same_counts(self, other: "CostReport") -> bool:
        keys = ("threshold", "master_storage", "master_comp", "master_comm",
                "worker_storage", "worker_comp", "worker_comm",
                "receiver_comp")
        return all(getattr(self, k) == getattr(other, k) for k in keys)


def recovery_threshold(family: str, s_r: int = 1, s_c: int = 1,
                       m: int = None, m_B: int = None) -> int:
    if family in ("Poly", "StPoly"):
        return m * m_B
    if family in ("MatDot", "StMatDot"):
        s = s_r * s_c
        return 2 * s - 1
    if family in _GRID_FAMILIES:
        return s_c * s_c * (2 * s_r - 1)
    raise UnknownScheme(family)


@dataclass
class CodeSpec:
    """Parameters of one coded multiplication job; validates on build."""
    family: str
    q: int
    m_A: int
    m: int
    N: int
    m_B: Optional[int] = None
    s_r: int = 1
    s_c: int = 1
    points: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnknownScheme(self.family)
        self.field = FieldSpec(self.q)
        if self.m_B is None:
            self.m_B = self.m
        if self.family not in ("Poly", "StPoly") and self.m_B != self.m:
            raise ConfigError(f"{self.family} computes square products "
                              f"(m_B must equal m)")
        if min(self.m_A, self.m, self.m_B, self.s_r, self.s_c) < 1:
            raise OutOfRange("dimensions must be positive")
        if self.family == "StPoly" and self.m_A % 2:
            raise ConfigError("StPoly halves the inner dimension: 2 | m_A")
        if self.family in ("MatDot", "StMatDot"):
            s = self.s_r * self.s_c
            need = 2 * s if self.family == "StMatDot" else s
            if self.m_A % need:
                raise ConfigError(f"{self.family} requires {need} | m_A")
        if self.family in _GRID_FAMILIES:
            need_r = 2 * self.s_r if self.family.startswith("St") else self.s_r
            if self.m_A % need_r:
                raise ConfigError(f"{self.family} requires {need_r} | m_A")
            if self.m % self.s_c:
                raise ConfigError(f"{self.family} requires s_c | m")
        if self.family in _SYMMETRIZING and self.q == 2:
            raise EvenFieldDivision(f"{self.family} symmetrizes (odd q only)")
        if self.N < self.threshold:
            raise ConfigError(f"N={self.N} below threshold {self.threshold}")
        if self.q <= self.N:
            raise ConfigError(f"need q > N for distinct nonzero points")
        if self.points is None:
            self.points = tuple(range(1, self.N + 1))
        else:
            self.points = tuple(int(x) % self.q for x in self.points)
        if len(self.points) != self.N:
            raise ConfigError("need one evaluation point per worker")
        if len(set(self.points)) != self.N or 0 in self.points:
            raise DuplicateEvaluationPoint("points must be distinct nonzero")

    @property
    def threshold(self) -> int:
        return recovery_threshold(self.family, self.s_r, self.s_c,
                                  self.m, self.m_B)

    def check_shapes(self, A: FqMatrix, B: FqMatrix):
        if A.shape != (self.m_A, self.m):
            raise ShapeMismatch(f"A is {A.shape}, expected {(self.m_A, self.m)}")
        if B.shape != (self.m_A, self.m_B):
            raise ShapeMismatch(f"B is {B.shape}, expected {(self.m_A, self.m_B)}")
        if A.q != self.q or B.q != self.q:
            raise ShapeMismatch("inputs live in the wrong field")


@dataclass
class ShareBundle:
    family: str
    q: int
    i: int
    x_i: int
    polys: Tuple[FqMatrix, ...]

    def element_count(self) -> int:
        return sum(p.shape[0] * p.shape[1] for p in self.polys)


@dataclass
class WorkerOutput:
    i: int
    x_i: int
    value: FqMatrix


# ---------------------------------------------------------------------------
# block splitting and encoding
# ---------------------------------------------------------------------------

def split_blocks(spec: CodeSpec, A: FqMatrix, B: FqMatrix):
    """Return the (block, exponent) lists defining the two encoding
    polynomials of the family."""
    spec.check_shapes(A, B)
    fam = spec.family
    if fam in ("Poly", "StPoly"):
        a = [(A.block(0, spec.m_A, j, j + 1), j) for j in range(spec.m)]
        b = [(B.block(0, spec.m_A, k, k + 1), k * spec.m)
             for k in range(spec.m_B)]
        return a, b
    if fam in ("MatDot", "StMatDot"):
        s = spec.s_r * spec.s_c
        r = spec.m_A // s
        a = [(A.block(j * r, (j + 1) * r, 0, spec.m), j) for j in range(s)]
        b = [(B.block(j * r, (j + 1) * r, 0, spec.m), s - 1 - j)
             for j in range(s)]
        return a, b
    # grid families
    r, c = spec.m_A // spec.s_r, spec.m // spec.s_c
    a, b = [], []
    for j in range(spec.s_r):
        for k in range(spec.s_c):
            blk_a = A.block(j * r, (j + 1) * r, k * c, (k + 1) * c)
            blk_b = B.block(j * r, (j + 1) * r, k * c, (k + 1) * c)
            a.append((blk_a, k + spec.s_c * j))
            b.append((blk_b, spec.s_c * (spec.s_r - 1 - j)
                      + spec.s_c * (2 * spec.s_r - 1) * k))
    return a, b


def eval_combo(field: FieldSpec, terms, x: int) -> FqMatrix:
    """Evaluate sum_j M_j x^{e_j} at the point x."""
    q = field.q
    acc = np.zeros(terms[0][0].shape, dtype=np.int64)
    for blk, e in terms:
        acc = (acc + blk.data.astype(np.int64) * pow(x, e, q)) % q
    return FqMatrix(field, acc)


def _halves(M: FqMatrix) -> Tuple[FqMatrix, FqMatrix]:
    h = M.shape[0] // 2
    return M.block(0, h, 0, M.shape[1]), M.block(h, M.shape[0], 0, M.shape[1])


def _check_symmetry_domain(spec: CodeSpec, A: FqMatrix, B: FqMatrix):
    """Receiver symmetrization recovers each interpolated block only up to
    its symmetric part, so the symmetrizing families require every recovered
    block of A^T B to be symmetric (for MatDot layout that is the whole
    product; for the grid layout, each (m/s_c) x (m/s_c) block)."""
    prod = A.T @ B
    c = spec.m // spec.s_c if spec.family == "StPolyDotSym" else spec.m
    for k in range(spec.m // c):
        for kp in range(spec.m // c):
            if not prod.block(k * c, (k + 1) * c,
                              kp * c, (kp + 1) * c).is_symmetric():
                raise AsymmetryDetected(
                    f"{spec.family}: block ({k},{kp}) of A^T B is not "
                    f"symmetric; use StPolyDotGen for such inputs")


def master_encode(spec: CodeSpec, A: FqMatrix, B: FqMatrix,
                  cost: CostReport = None,
                  verify_symmetry: bool = False) -> List[ShareBundle]:
    """Build the per-worker share bundles.

    verify_symmetry: for the symmetrizing families, additionally check the
    exact correctness precondition — every block of A^T B that the receiver
    recovers must be a symmetric matrix — and raise AsymmetryDetected if it
    fails (the 4-polynomial family has no such restriction).
    """
    terms_a, terms_b = split_blocks(spec, A, B)
    if verify_symmetry and spec.family in _SYMMETRIZING:
        _check_symmetry_domain(spec, A, B)
    fam, f = spec.family, spec.field
    if cost is not None:
        src = spec.m_A * (spec.m + spec.m_B)
        cost.add(master_storage=2 * src if fam in ("Poly", "StPoly") else src)
        cost.family = fam
        cost.threshold = spec.threshold
    bundles = []
    for i, x in enumerate(spec.points):
        at = eval_combo(f, terms_a, x)
        bt = eval_combo(f, terms_b, x)
        n_eval = spec.m_A * (spec.m + spec.m_B) if fam in ("Poly", "StPoly") \
            else 2 * spec.m_A * spec.m
        if fam in ("Poly", "MatDot", "PolyDot"):
            polys = (at, bt)
            extra = 0
        elif fam in ("StPoly", "StMatDot", "StPolyDotSym"):
            a1, a2 = _halves(at)
            b1, b2 = _halves(bt)
            p1 = a2 + b1
            p2 = a1 + b2
            p3 = (a2.T @ a1) + (b1.T @ b2)
            polys = (p1, p2, p3)
            half = a1.shape[0] * a1.shape[1]
            out = p3.shape[0] * p3.shape[1]
            extra = 2 * half + (2 * p3.shape[0] * a1.shape[0] * p3.shape[1] + out)
        elif fam == "StPolyDotGen":
            a1, a2 = _halves(at)
            b1, b2 = _halves(bt)
            p1 = a1 + b2
            p4 = (a2.T @ a1) + (b2.T @ b1)
            polys = (p1, a2, b1, p4)
            half = a1.shape[0] * a1.shape[1]
            out = p4.shape[0] * p4.shape[1]
            extra = half + (2 * p4.shape[0] * a1.shape[0] * p4.shape[1] + out)
        else:
            raise UnknownScheme(fam)
        bundle = ShareBundle(fam, spec.q, i, x, polys)
        if cost is not None:
            nel = bundle.element_count()
            cost.add(master_comp=n_eval + extra, master_comm=nel,
                     worker_storage=nel)
        bundles.append(bundle)
    return bundles


def worker_compute(spec: CodeSpec, bundle: ShareBundle,
                   cost: CostReport = None) -> WorkerOutput:
    fam = bundle.family
    if fam != spec.family or bundle.q != spec.q:
        raise MalformedBundle(f"bundle family/field mismatch")
    ps = bundle.polys
    if fam in ("Poly", "MatDot", "PolyDot"):
        val = ps[0].T @ ps[1]
        ops = val.shape[0] * ps[0].shape[0] * val.shape[1]
    elif fam in ("StPoly", "StMatDot", "StPolyDotSym"):
        val = (ps[0].T @ ps[1]) - ps[2]
        ops = (val.shape[0] * ps[0].shape[0] * val.shape[1]
               + val.shape[0] * val.shape[1])
    elif fam == "StPolyDotGen":
        val = (ps[1].T @ ps[0]) + (ps[0].T @ ps[2]) - ps[3]
        ops = 2 * (val.shape[0] * ps[0].shape[0] * val.shape[1]) \
            + 2 * val.shape[0] * val.shape[1]
    else:
        raise UnknownScheme(fam)
    if cost is not None:
        cost.add(worker_comp=ops)
    return WorkerOutput(bundle.i, bundle.x_i, val)


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------

def _select_outputs(spec: CodeSpec, outputs: Sequence[WorkerOutput]):
    thr = spec.threshold
    xs = [o.x_i for o in outputs]
    if len(set(xs)) != len(xs):
        raise DuplicateEvaluationPoint("repeated worker evaluation point")
    if len(outputs) < thr:
        raise InsufficientOutputs(f"{len(outputs)} outputs < threshold {thr}")
    chosen = list(outputs)[:thr]
    return [o.x_i for o in chosen], [o.value for o in chosen]


def _coeff(field: FieldSpec, xs, values, e: int) -> FqMatrix:
    cs = lagrange_coeffs(field, xs, e)
    acc = np.zeros(values[0].shape, dtype=np.int64)
    q = field.q
    for c, v in zip(cs, values):
        if c:
            acc = (acc + v.data.astype(np.int64) * c) % q
    return FqMatrix(field, acc)


def receiver_decode(spec: CodeSpec, outputs: Sequence[WorkerOutput],
                    cost: CostReport = None) -> FqMatrix:
    """Interpolate the desired coefficients of the product polynomial from
    any `threshold` distinct worker outputs."""
    xs, values = _select_outputs(spec, outputs)
    f = spec.field
    fam = spec.family
    if fam in _SYMMETRIZING:
        inv2 = f.inv2
        values = [FqMatrix(f, (v.data.astype(np.int64)
                               + v.data.T.astype(np.int64)) * inv2 % spec.q)
                  for v in values]
    thr = spec.threshold
    out_elems = values[0].shape[0] * values[0].shape[1]
    if cost is not None:
        cost.add(worker_comm=thr * out_elems,
                 receiver_comp=thr * out_elems + thr ** 3)
    if fam in ("Poly", "StPoly"):
        out = np.zeros((spec.m, spec.m_B), dtype=np.int64)
        for k in range(spec.m_B):
            for j in range(spec.m):
                out[j, k] = _coeff(f, xs, values, j + k * spec.m).item()
        return FqMatrix(f, out)
    if fam in ("MatDot", "StMatDot"):
        s = spec.s_r * spec.s_c
        return _coeff(f, xs, values, s - 1)
    # grid families
    c = spec.m // spec.s_c
    out = np.zeros((spec.m, spec.m), dtype=np.int64)
    for k in range(spec.s_c):
        for kp in range(spec.s_c):
            e = k + spec.s_c * (spec.s_r - 1) \
                + spec.s_c * (2 * spec.s_r - 1) * kp
            blk = _coeff(f, xs, values, e)
            out[k * c:(k + 1) * c, kp * c:(kp + 1) * c] = blk.data
    return FqMatrix(f, out)


# ---------------------------------------------------------------------------
# share serialization
# ---------------------------------------------------------------------------

def serialize_share(bundle: ShareBundle) -> bytes:
    doc = {
        "version": 1,
        "family": bundle.family,
        "q": bundle.q,
        "i": bundle.i,
        "x_i": bundle.x_i,
        "polys": [
            {"rows": p.shape[0], "cols": p.shape[1],
             "entries": [int(v) for v in p.data.ravel()]}
            for p in bundle.polys
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def deserialize_share(blob: bytes) -> ShareBundle:
    try:
        doc = json.loads(blob.decode())
        if doc["version"] != 1:
            raise MalformedBundle(f"unsupported version {doc['version']}")
        f = FieldSpec(doc["q"])
        polys = tuple(
            FqMatrix(f, np.array(p["entries"], dtype=np.int64)
                     .reshape(p["rows"], p["cols"]))
            for p in doc["polys"]
        )
        return ShareBundle(doc["family"], doc["q"], doc["i"], doc["x_i"],
                           polys)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise MalformedBundle(str(exc)) from exc
