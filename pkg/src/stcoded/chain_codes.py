"""Distributed chain matrix multiplication (products of 2-4 square matrices).

Two methods over the grid polynomial codes of `poly_codes`:

  hierarchical  reduce the chain to sequential rounds of 2-matrix products;
                each round is a full 4-polynomial coded job, and the receiver
                materializes each intermediate product between rounds.
  recursive     single-pass schemes for 3 and 4 matrices in which every
                worker evaluates the whole chain at its point; the receiver
                only ever interpolates chain-product coefficients, so no
                intermediate 2-matrix product is materialized outside the
                per-point worker values.

For the recursive schemes the third (and fourth) matrix is encoded on
exponents scaled by N1 = s_c^2(2s_r - 1), the degree span of the first-stage
product polynomial.  This keeps the first-stage coefficients and the
outer-matrix coefficients in disjoint exponent classes, at the price of a
larger interpolation support than the two-stage threshold formulas suggest;
`chain_points_required` reports the support size actually needed while
`chain_thresholds` evaluates the closed-form two-stage formulas.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    ConfigError,
    DivisibilityViolation,
    InsufficientOutputs,
    OutOfRange,
    ShapeMismatch,
    UnknownScheme,
)
from .gf_core import FieldSpec, FqMatrix
from . import cluster_sim
from .poly_codes import (
    CodeSpec,
    CostReport,
    ShareBundle,
    WorkerOutput,
    _coeff,
    master_encode,
    receiver_decode,
    worker_compute,
)

_METHODS = ("hierarchical", "recursive")


def chain_thresholds(n_matrices: int, s_r: int, s_c: int,
                     method: str = "recursive") -> int:
    """Closed-form recovery thresholds.

    hierarchical: the per-round grid threshold s_c^2(2s_r-1) (each round is
    an independent 2-matrix job).  recursive: the two-stage interpolation
    counts — 3 matrices: s_c^2(2s_r-1) + s_c(2s_r-1)s_r/2 (s_r even);
    4 matrices: 2s_c^2(2s_r-1).
    """
    if method not in _METHODS:
        raise UnknownScheme(method)
    n1 = s_c * s_c * (2 * s_r - 1)
    if method == "hierarchical" or n_matrices == 2:
        if n_matrices not in (2, 3, 4):
            raise OutOfRange(f"chain length {n_matrices}")
        return n1
    if n_matrices == 3:
        if s_r % 2:
            raise DivisibilityViolation(
                "3-chain recursive threshold needs even s_r")
        return n1 + s_c * (2 * s_r - 1) * (s_r // 2)
    if n_matrices == 4:
        return 2 * n1
    raise OutOfRange(f"chain length {n_matrices}")


def chain_points_required(n_matrices: int, s_r: int, s_c: int) -> int:
    """Distinct evaluation points the recursive receiver actually
    interpolates over (1 + maximum exponent of the chain polynomial)."""
    n1 = s_c * s_c * (2 * s_r - 1)
    if n_matrices == 2:
        return n1
    if n_matrices == 3:
        # outer matrix on N1-scaled B-type exponents
        return n1 * (s_c * (s_r - 1) + s_c * (2 * s_r - 1) * (s_c - 1) + 1)
    if n_matrices == 4:
        return n1 * n1
    raise OutOfRange(f"chain length {n_matrices}")


@dataclass
class ChainJob:
    """One chain multiplication A^T B C^T (D): 2-4 square m x m matrices."""
    matrices: Tuple[FqMatrix, ...]
    method: str
    q: int
    m: int
    N: int
    s_r: int = 1
    s_c: int = 1
    points: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise UnknownScheme(self.method)
        self.field = FieldSpec(self.q)
        self.matrices = tuple(self.matrices)
        if len(self.matrices) not in (2, 3, 4):
            raise OutOfRange(f"chain length {len(self.matrices)}")
        for M in self.matrices:
            if M.shape != (self.m, self.m):
                raise ShapeMismatch(f"chain matrices must be {self.m} square")
            if M.q != self.q:
                raise ShapeMismatch("chain matrices live in the wrong field")
        if self.m % (2 * self.s_r) or self.m % self.s_c:
            raise DivisibilityViolation("need 2 s_r | m and s_c | m")
        if self.method == "recursive" and len(self.matrices) == 3:
            if (2 * self.s_r) % self.s_c or self.m % (2 * self.s_c):
                raise DivisibilityViolation(
                    "3-chain recursive tiling needs s_c | 2 s_r and 2 s_c | m")
        need = self.min_workers
        if self.N < need:
            raise ConfigError(f"N={self.N} below required {need}")
        if self.q <= self.N:
            raise ConfigError("need q > N for distinct nonzero points")
        if self.points is None:
            self.points = tuple(range(1, self.N + 1))
        self.points = tuple(int(x) % self.q for x in self.points)
        if (len(self.points) != self.N or len(set(self.points)) != self.N
                or 0 in self.points):
            raise ConfigError("points must be N distinct nonzero residues")

    @property
    def n_matrices(self) -> int:
        return len(self.matrices)

    @property
    def min_workers(self) -> int:
        if self.method == "hierarchical":
            return chain_thresholds(2, self.s_r, self.s_c, "hierarchical")
        return chain_points_required(self.n_matrices, self.s_r, self.s_c)

    def direct_product(self) -> FqMatrix:
        out = self.matrices[0].T @ self.matrices[1]
        for idx, M in enumerate(self.matrices[2:]):
            out = out @ M.T if idx % 2 == 0 else out @ M
        return out


# ---------------------------------------------------------------------------
# hierarchical method: sequential rounds of coded 2-matrix products
# ---------------------------------------------------------------------------

def _pair_product(job: ChainJob, X: FqMatrix, Y: FqMatrix,
                  survivors: Sequence[int], cost: CostReport) -> FqMatrix:
    spec = CodeSpec("StPolyDotGen", job.q, job.m, job.m, job.N,
                    s_r=job.s_r, s_c=job.s_c, points=job.points)
    bundles = master_encode(spec, X, Y, cost)
    outputs = [worker_compute(spec, bundles[i], cost) for i in survivors]
    if len(outputs) < spec.threshold:
        raise InsufficientOutputs(
            f"{len(outputs)} survivors < round threshold {spec.threshold}")
    return receiver_decode(spec, outputs, cost)


def chain_hierarchical(job: ChainJob, cost: CostReport = None,
                       survivors: Sequence[int] = None) -> FqMatrix:
    """Chain product via sequential coded 2-matrix rounds (the receiver
    materializes every intermediate product)."""
    if job.method != "hierarchical":
        raise ConfigError("job.method must be 'hierarchical'")
    cost = cost if cost is not None else CostReport()
    cost.family = "ChainHierarchical"
    survivors = tuple(survivors) if survivors is not None \
        else tuple(range(job.N))
    mats = job.matrices
    first = _pair_product(job, mats[0], mats[1], survivors, cost)
    if job.n_matrices == 2:
        return first
    if job.n_matrices == 3:
        return _pair_product(job, first.T, mats[2].T, survivors, cost)
    second = _pair_product(job, mats[2], mats[3], survivors, cost)
    return _pair_product(job, first.T, second, survivors, cost)


# ---------------------------------------------------------------------------
# recursive single-pass schemes
# ---------------------------------------------------------------------------

def _grid_terms(M: FqMatrix, s_r: int, s_c: int, kind: str, scale: int = 1):
    """(block, exponent) terms of the grid encoding of M; `scale`
    multiplies every exponent (used to lift the outer matrices into a
    disjoint exponent class)."""
    m_r, m_c = M.shape
    r, c = m_r // s_r, m_c // s_c
    terms = []
    for j in range(s_r):
        for k in range(s_c):
            if kind == "A":
                e = k + s_c * j
            else:
                e = s_c * (s_r - 1 - j) + s_c * (2 * s_r - 1) * k
            terms.append((M.block(j * r, (j + 1) * r, k * c, (k + 1) * c),
                          e * scale))
    return terms


def _eval_terms(field: FieldSpec, terms, x: int) -> FqMatrix:
    q = field.q
    acc = np.zeros(terms[0][0].shape, dtype=np.int64)
    for blk, e in terms:
        acc = (acc + blk.data.astype(np.int64) * pow(x, e, q)) % q
    return FqMatrix(field, acc)


def _halves(M: FqMatrix) -> Tuple[FqMatrix, FqMatrix]:
    h = M.shape[0] // 2
    return M.block(0, h, 0, M.shape[1]), M.block(h, M.shape[0], 0, M.shape[1])


def _tile_matrix(job: ChainJob) -> FqMatrix:
    # horizontal tiling of identities: (m/2s_r) x (m/s_c), repeating
    # I_{m/2s_r} exactly 2s_r/s_c times
    w = job.m // (2 * job.s_r)
    copies = (2 * job.s_r) // job.s_c
    eye = np.eye(w, dtype=np.int64)
    return FqMatrix(job.field, np.hstack([eye] * copies))


def _desired_exponent(s_r: int, s_c: int, k: int, kp: int) -> int:
    return k + s_c * (s_r - 1) + s_c * (2 * s_r - 1) * kp


def _b_exponent(s_r: int, s_c: int, j: int, k: int) -> int:
    return s_c * (s_r - 1 - j) + s_c * (2 * s_r - 1) * k


def chain3_encode(job: ChainJob, cost: CostReport = None
                  ) -> List[ShareBundle]:
    """Per-worker bundles for the single-pass 3-chain A^T B C^T."""
    A, B, C = job.matrices
    f = job.field
    s_r, s_c, m = job.s_r, job.s_c, job.m
    n1 = s_c * s_c * (2 * s_r - 1)
    ta = _grid_terms(A, s_r, s_c, "A")
    tb = _grid_terms(B, s_r, s_c, "B")
    tc = _grid_terms(C, s_r, s_c, "B", scale=n1)
    J = _tile_matrix(job)
    half, wc = m // (2 * s_r), m // s_c
    bundles = []
    for i, x in enumerate(job.points):
        at = _eval_terms(f, ta, x)
        bt = _eval_terms(f, tb, x)
        ct = _eval_terms(f, tc, x)
        a1, a2 = _halves(at)
        b1, b2 = _halves(bt)
        c1, c2 = _halves(ct)
        p1 = b1 + c2
        p2 = b2 + c1
        D = bt @ (p2 - b2).T       # = B~ C~1^T
        E = bt @ (p1 - b1).T       # = B~ C~2^T
        d1, d2 = _halves(D)
        e1, e2 = _halves(E)
        p31 = a1 + d2 @ J
        p32 = a1 + e2 @ J
        p51 = d1 @ J
        p52 = e1 @ J
        gram = a2.T @ a1
        p61 = gram + J.T @ (d2.T @ d1) @ J
        p62 = gram + J.T @ (e2.T @ e1) @ J
        bundle = ShareBundle("Chain3Recursive", job.q, i, x,
                             (p31, p32, a2, p51, p52, p61, p62))
        if cost is not None:
            cost.add(master_comp=(
                2 * half * wc                      # p1, p2
                + 4 * half * wc * half             # D and E products
                + 2 * half * wc                    # p31, p32
                + wc * half * wc                   # gram
                + 2 * half ** 3                    # d2^T d1, e2^T e1
                + 2 * wc * wc),                    # p61, p62 additions
                master_comm=bundle.element_count(),
                worker_storage=bundle.element_count())
        bundles.append(bundle)
    if cost is not None:
        cost.family = "Chain3Recursive"
        cost.threshold = job.min_workers
        cost.add(master_storage=3 * m * m)
    return bundles


def chain3_worker(job: ChainJob, bundle: ShareBundle,
                  cost: CostReport = None) -> WorkerOutput:
    p31, p32, p4, p51, p52, p61, p62 = bundle.polys
    out1 = (p4.T @ p31) + (p31.T @ p51) - p61   # = A~^T D~ J
    out2 = (p4.T @ p32) + (p32.T @ p52) - p62   # = A~^T E~ J
    if cost is not None:
        wc, half = out1.shape[0], p31.shape[0]
        cost.add(worker_comp=4 * wc * half * wc + 4 * wc * wc)
    return WorkerOutput(bundle.i, bundle.x_i, out1.hstack(out2))


def chain3_decode(job: ChainJob, outputs: Sequence[WorkerOutput],
                  cost: CostReport = None) -> FqMatrix:
    """Interpolate the 3-chain product from any `min_workers` outputs; the
    tiled worker values collapse to A~^T D~ and A~^T E~ via their leading
    columns, whose concatenation is the chain polynomial A~^T B~ C~^T."""
    f = job.field
    s_r, s_c, m = job.s_r, job.s_c, job.m
    n1 = s_c * s_c * (2 * s_r - 1)
    w = m // (2 * s_r)
    wc = m // s_c
    need = job.min_workers
    xs = [o.x_i for o in outputs]
    if len(set(xs)) != len(xs):
        raise InsufficientOutputs("repeated worker evaluation point")
    if len(outputs) < need:
        raise InsufficientOutputs(f"{len(outputs)} outputs < {need}")
    chosen = list(outputs)[:need]
    xs = [o.x_i for o in chosen]
    values = []
    for o in chosen:
        part1 = o.value.block(0, wc, 0, w)
        part2 = o.value.block(0, wc, wc, wc + w)
        values.append(part1.hstack(part2))     # A~^T B~ C~^T at x
    if cost is not None:
        out_elems = wc * 2 * w
        cost.add(worker_comm=need * out_elems,
                 receiver_comp=need * out_elems + need ** 3)
    out = np.zeros((m, m), dtype=np.int64)
    rb = m // s_r
    for K in range(s_c):
        for jpp in range(s_r):
            acc = np.zeros((wc, rb), dtype=np.int64)
            for kp in range(s_c):
                e = (_desired_exponent(s_r, s_c, K, kp)
                     + n1 * _b_exponent(s_r, s_c, jpp, kp))
                acc = (acc + _coeff(f, xs, values, e).data) % job.q
            out[K * wc:(K + 1) * wc, jpp * rb:(jpp + 1) * rb] = acc
    return FqMatrix(f, out)


def chain4_encode(job: ChainJob, cost: CostReport = None
                  ) -> List[ShareBundle]:
    """Per-worker bundles for the single-pass 4-chain A^T B C^T D."""
    A, B, C, D = job.matrices
    f = job.field
    s_r, s_c, m = job.s_r, job.s_c, job.m
    n1 = s_c * s_c * (2 * s_r - 1)
    ta = _grid_terms(A, s_r, s_c, "A")
    tb = _grid_terms(B, s_r, s_c, "B")
    tc = _grid_terms(C, s_r, s_c, "A", scale=n1)
    td = _grid_terms(D, s_r, s_c, "B", scale=n1)
    half, wc = m // (2 * s_r), m // s_c
    bundles = []
    for i, x in enumerate(job.points):
        at = _eval_terms(f, ta, x)
        bt = _eval_terms(f, tb, x)
        ct = _eval_terms(f, tc, x)
        dt = _eval_terms(f, td, x)
        a1, a2 = _halves(at)
        b1, b2 = _halves(bt)
        c1, c2 = _halves(ct)
        d1, d2 = _halves(dt)
        p1 = b1 + c2
        p2 = b2 + c1
        p3 = b1 + d2
        p4 = b2 + d1
        inner = ((p2 - b2).T @ (p4 - b2)) + ((p1 - b1).T @ (p3 - b1))
        E = bt @ inner                          # = B~ C~^T D~
        e1, e2 = _halves(E)
        p5 = a1 + e2
        p8 = (a2.T @ a1) + (e2.T @ e1)
        bundle = ShareBundle("Chain4Recursive", job.q, i, x,
                             (p5, a2, e1, p8))
        if cost is not None:
            cost.add(master_comp=(
                4 * half * wc                      # p1..p4
                + 2 * wc * half * wc + wc * wc     # inner products and sum
                + 2 * half * wc * wc               # B~ @ inner
                + half * wc                        # p5
                + 2 * wc * half * wc + wc * wc),   # p8
                master_comm=bundle.element_count(),
                worker_storage=bundle.element_count())
        bundles.append(bundle)
    if cost is not None:
        cost.family = "Chain4Recursive"
        cost.threshold = job.min_workers
        cost.add(master_storage=4 * m * m)
    return bundles


def chain4_worker(job: ChainJob, bundle: ShareBundle,
                  cost: CostReport = None) -> WorkerOutput:
    p5, p6, p7, p8 = bundle.polys
    val = (p6.T @ p5) + (p5.T @ p7) - p8        # = A~^T E~
    if cost is not None:
        wc, half = val.shape[0], p5.shape[0]
        cost.add(worker_comp=2 * wc * half * wc + 2 * wc * wc)
    return WorkerOutput(bundle.i, bundle.x_i, val)


def chain4_decode(job: ChainJob, outputs: Sequence[WorkerOutput],
                  cost: CostReport = None) -> FqMatrix:
    f = job.field
    s_r, s_c, m = job.s_r, job.s_c, job.m
    n1 = s_c * s_c * (2 * s_r - 1)
    wc = m // s_c
    need = job.min_workers
    xs = [o.x_i for o in outputs]
    if len(set(xs)) != len(xs):
        raise InsufficientOutputs("repeated worker evaluation point")
    if len(outputs) < need:
        raise InsufficientOutputs(f"{len(outputs)} outputs < {need}")
    chosen = list(outputs)[:need]
    xs = [o.x_i for o in chosen]
    values = [o.value for o in chosen]
    if cost is not None:
        out_elems = wc * wc
        cost.add(worker_comm=need * out_elems,
                 receiver_comp=need * out_elems + need ** 3)
    out = np.zeros((m, m), dtype=np.int64)
    for K in range(s_c):
        for Kpp in range(s_c):
            acc = np.zeros((wc, wc), dtype=np.int64)
            for kp in range(s_c):
                e = (_desired_exponent(s_r, s_c, K, kp)
                     + n1 * _desired_exponent(s_r, s_c, kp, Kpp))
                acc = (acc + _coeff(f, xs, values, e).data) % job.q
            out[K * wc:(K + 1) * wc, Kpp * wc:(Kpp + 1) * wc] = acc
    return FqMatrix(f, out)


def chain3_recursive(job: ChainJob, cost: CostReport = None,
                     survivors: Sequence[int] = None) -> FqMatrix:
    if job.method != "recursive" or job.n_matrices != 3:
        raise ConfigError("expected a recursive 3-chain job")
    survivors = tuple(survivors) if survivors is not None \
        else tuple(range(job.N))
    bundles = chain3_encode(job, cost)
    outputs = [chain3_worker(job, bundles[i], cost) for i in survivors]
    return chain3_decode(job, outputs, cost)


def chain4_recursive(job: ChainJob, cost: CostReport = None,
                     survivors: Sequence[int] = None) -> FqMatrix:
    if job.method != "recursive" or job.n_matrices != 4:
        raise ConfigError("expected a recursive 4-chain job")
    survivors = tuple(survivors) if survivors is not None \
        else tuple(range(job.N))
    bundles = chain4_encode(job, cost)
    outputs = [chain4_worker(job, bundles[i], cost) for i in survivors]
    return chain4_decode(job, outputs, cost)


def chain_cost_closed_forms(job: ChainJob) -> CostReport:
    """Closed-form master/worker computation totals for the recursive
    schemes (communication and storage cells mirror the instrumented
    element counts)."""
    if job.method != "recursive":
        raise ConfigError("closed forms cover the recursive schemes")
    N, m, s_r, s_c = job.N, job.m, job.s_r, job.s_c
    need = job.min_workers
    if job.n_matrices == 3:
        master = (m ** 3 // (2 * s_r * s_c * s_c)
                  + m ** 3 // (s_r * s_r * s_c)
                  + m ** 3 // (4 * s_r ** 3)
                  + 2 * m * m // (s_r * s_c)
                  + 2 * m * m // (s_c * s_c))
        worker = 2 * m ** 3 // (s_r * s_c * s_c) + 4 * m * m // (s_c * s_c)
        per_store = (5 * m * m // (2 * s_r * s_c)
                     + 2 * m * m // (s_c * s_c))
        out_elems = (m // s_c) * (m // s_r)
        storage = 3 * m * m
        fam = "Chain3Recursive"
    elif job.n_matrices == 4:
        master = (3 * m ** 3 // (s_r * s_c * s_c)
                  + 5 * m * m // (2 * s_r * s_c)
                  + 2 * m * m // (s_c * s_c))
        worker = m ** 3 // (s_r * s_c * s_c) + 2 * m * m // (s_c * s_c)
        per_store = 3 * m * m // (2 * s_r * s_c) + m * m // (s_c * s_c)
        out_elems = m * m // (s_c * s_c)
        storage = 4 * m * m
        fam = "Chain4Recursive"
    else:
        raise OutOfRange("closed forms cover 3- and 4-chains")
    return CostReport(
        family=fam,
        threshold=need,
        master_storage=storage,
        master_comp=N * master,
        master_comm=N * per_store,
        worker_storage=N * per_store,
        worker_comp=N * worker,
        worker_comm=need * out_elems,
        receiver_comp=need * out_elems + need ** 3,
    )


def _run_chain(job: ChainJob, inputs, survivors, cost: CostReport):
    if len(survivors) < job.min_workers:
        return None
    try:
        if job.method == "hierarchical":
            return chain_hierarchical(job, cost, survivors)
        if job.n_matrices == 3:
            return chain3_recursive(job, cost, survivors)
        if job.n_matrices == 4:
            return chain4_recursive(job, cost, survivors)
        # recursive 2-chain degenerates to one coded 2-matrix round
        return _pair_product(job, job.matrices[0], job.matrices[1],
                             survivors, cost)
    except InsufficientOutputs:
        return None


cluster_sim.register_runner(ChainJob, _run_chain)
