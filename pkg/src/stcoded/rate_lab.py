"""Exact rate computations for structured distributed matrix multiplication.

Closed-form sum rates, exact entropies by enumeration of small source models,
multiplicative gaps against the unstructured baseline, and the per-scheme
message-count tables for symmetric products.

Entropies are in bits unless a function says otherwise; `p` is always a
crossover probability of a doubly symmetric binary source (DSBS), i.e.
b = a xor e with e ~ Bern(p) and a uniform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from itertools import product
from typing import Callable, Iterator, Optional, Tuple

import numpy as np

from .errors import OutOfRange, ScaleExceeded, UnknownScheme
from .gf_core import FieldSpec, FqMatrix
from . import source_maps as sm

_MAX_WORLDS = 1 << 22


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"probability {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _entropy_of_dist(probs) -> float:
    return -sum(p * math.log2(p) for p in probs if p > 0.0)


# ---------------------------------------------------------------------------
# source models
# ---------------------------------------------------------------------------

@dataclass
class SourceModel:
    """A joint distribution over input pairs (A, B) in F_q^{m x l}.

    `worlds` enumerates (A, B, prob) with numpy int arrays; kept small enough
    to enumerate exactly (ScaleExceeded otherwise).
    """
    kind: str
    q: int
    m: int
    l: int
    params: dict = dc_field(default_factory=dict)

    # -- constructors ------------------------------------------------------
    @classmethod
    def asym_cross_dsbs(cls, m: int, p: float) -> "SourceModel":
        """b_i is DSBS(p)-paired with a_{(i + floor(m/2)) mod m}.

        For even m this is the asymmetric cross pairing
        (a_{m/2+i}, b_i), (a_i, b_{m/2+i}); for odd m the same cyclic shift
        gives the unique perfect matching extending it.
        """
        return cls("asym_cross_dsbs", 2, m, 1, {"p": p})

    @classmethod
    def elementwise_dsbs(cls, m: int, l: int, p: float) -> "SourceModel":
        return cls("elementwise_dsbs", 2, m, l, {"p": p})

    @classmethod
    def correlated_ternary(cls, m: int, eps: float, p: float) -> "SourceModel":
        """Ternary two-column model: per row, (a_1, b_1) follows a structured
        3x3 pmf with parameters (eps, p); a_2 = -b_1 and b_2 = b_1."""
        if not 0 < eps < 0.5:
            raise OutOfRange("eps must be in (0, 1/2)")
        return cls("correlated_ternary", 3, m, 2, {"eps": eps, "p": p})

    @classmethod
    def uniform(cls, q: int, m: int, l: int) -> "SourceModel":
        return cls("uniform", q, m, l, {})

    # -- enumeration -------------------------------------------------------
    def _ternary_row_pmf(self):
        eps, p = self.params["eps"], self.params["p"]
        half = 0.5 - eps
        return {
            (0, 0): half * (1 - p), (0, 1): half * p,
            (1, 0): 2 * eps * p, (1, 2): 2 * eps * (1 - p),
            (2, 1): half * (1 - p), (2, 2): half * p,
        }

    def worlds(self) -> Iterator[Tuple[np.ndarray, np.ndarray, float]]:
        m, l, q = self.m, self.l, self.q
        if self.kind == "asym_cross_dsbs":
            p = self.params["p"]
            if 4 ** m > _MAX_WORLDS:
                raise ScaleExceeded(f"4^{m} worlds")
            shift = m // 2
            for a in product((0, 1), repeat=m):
                for e in product((0, 1), repeat=m):
                    b = tuple(a[(i + shift) % m] ^ e[i] for i in range(m))
                    w = e.count(1)
                    prob = (0.5 ** m) * (p ** w) * ((1 - p) ** (m - w))
                    if prob == 0.0:
                        continue
                    yield (np.array(a).reshape(m, 1),
                           np.array(b).reshape(m, 1), prob)
        elif self.kind == "elementwise_dsbs":
            p = self.params["p"]
            n = m * l
            if 4 ** n > _MAX_WORLDS:
                raise ScaleExceeded(f"4^{n} worlds")
            for a in product((0, 1), repeat=n):
                for e in product((0, 1), repeat=n):
                    b = tuple(x ^ y for x, y in zip(a, e))
                    w = e.count(1)
                    prob = (0.5 ** n) * (p ** w) * ((1 - p) ** (n - w))
                    if prob == 0.0:
                        continue
                    yield (np.array(a).reshape(m, l),
                           np.array(b).reshape(m, l), prob)
        elif self.kind == "correlated_ternary":
            pmf = self._ternary_row_pmf()
            items = list(pmf.items())
            if len(items) ** m > _MAX_WORLDS:
                raise ScaleExceeded("ternary rows")
            for rows in product(items, repeat=m):
                prob = 1.0
                A = np.zeros((m, 2), dtype=int)
                B = np.zeros((m, 2), dtype=int)
                for i, ((a1, b1), pr) in enumerate(rows):
                    prob *= pr
                    A[i] = (a1, (-b1) % 3)
                    B[i] = (b1, b1)
                if prob > 0.0:
                    yield A, B, prob
        elif self.kind == "uniform":
            n = q ** (2 * m * l)
            if n > _MAX_WORLDS:
                raise ScaleExceeded(f"{q}^{2*m*l} worlds")
            pr = 1.0 / n
            for a in product(range(q), repeat=m * l):
                for b in product(range(q), repeat=m * l):
                    yield (np.array(a).reshape(m, l),
                           np.array(b).reshape(m, l), pr)
        else:
            raise UnknownScheme(self.kind)

    # -- sampling (used by the joint source/channel pipeline) --------------
    def sample(self, rng: np.random.Generator):
        m, l = self.m, self.l
        if self.kind == "asym_cross_dsbs":
            p = self.params["p"]
            shift = m // 2
            a = rng.integers(0, 2, m)
            e = (rng.random(m) < p).astype(int)
            b = np.array([a[(i + shift) % m] ^ e[i] for i in range(m)])
            return a.reshape(m, 1), b.reshape(m, 1)
        if self.kind == "elementwise_dsbs":
            p = self.params["p"]
            a = rng.integers(0, 2, (m, l))
            e = (rng.random((m, l)) < p).astype(int)
            return a, a ^ e
        if self.kind == "correlated_ternary":
            pmf = self._ternary_row_pmf()
            keys = list(pmf)
            probs = np.array([pmf[k] for k in keys])
            A = np.zeros((m, 2), dtype=int)
            B = np.zeros((m, 2), dtype=int)
            for i in range(m):
                a1, b1 = keys[rng.choice(len(keys), p=probs / probs.sum())]
                A[i] = (a1, (-b1) % 3)
                B[i] = (b1, b1)
            return A, B
        if self.kind == "uniform":
            return (rng.integers(0, self.q, (m, l)),
                    rng.integers(0, self.q, (m, l)))
        raise UnknownScheme(self.kind)


def entropy_exact(model: SourceModel, functional: Callable) -> float:
    """H(functional(A, B)) in bits, by exact enumeration of the model.

    The functional must return a hashable value; numpy arrays are hashed by
    bytes.
    """
    acc: dict = {}
    for A, B, pr in model.worlds():
        v = functional(A, B)
        if isinstance(v, np.ndarray):
            v = (v.shape, v.tobytes())
        elif isinstance(v, FqMatrix):
            v = (v.shape, v.data.tobytes())
        acc[v] = acc.get(v, 0.0) + pr
    return _entropy_of_dist(acc.values())


def joint_entropy_exact(model: SourceModel, *functionals: Callable) -> float:
    def tup(A, B):
        out = []
        for fn in functionals:
            v = fn(A, B)
            if isinstance(v, np.ndarray):
                v = (v.shape, v.tobytes())
            elif isinstance(v, FqMatrix):
                v = (v.shape, v.data.tobytes())
            out.append(v)
        return tuple(out)
    return entropy_exact(model, tup)


# ---------------------------------------------------------------------------
# closed-form rates
# ---------------------------------------------------------------------------

@dataclass
class RatePoint:
    scheme: str
    m: int
    l: int = 1
    q: int = 2
    p: Optional[float] = None
    epsilon: Optional[float] = None
    R_SW: Optional[float] = None
    R_KM: Optional[float] = None
    R_SV: Optional[float] = None
    R_AH: Optional[float] = None
    R_HK: Optional[float] = None
    eta: Optional[float] = None
    gamma: Optional[float] = None

    CSV_FIELDS = ("scheme", "m", "l", "q", "p", "epsilon", "R_SW", "R_KM",
                  "R_SV", "R_AH", "R_HK", "eta", "gamma")

    def as_row(self):
        return ["" if getattr(self, k) is None else getattr(self, k)
                for k in self.CSV_FIELDS]


def r_sw_dot(m: int, p: float) -> float:
    """Slepian-Wolf sum rate for the DSBS inner product setting."""
    return m * (1.0 + binary_entropy(p))


def r_km_dot(m: int, p: float) -> float:
    """Structured (Korner-Marton style) sum rate for the cross-DSBS inner
    product: 2 m h(p) + 2 (1 - (1-p)^m)."""
    return 2 * m * binary_entropy(p) + 2 * (1 - (1 - p) ** m)


def eta_dot(m: int, p: float) -> float:
    return r_sw_dot(m, p) / r_km_dot(m, p)


def eta_dot_limit_p1(m: int) -> float:
    """lim_{p -> 1} eta = m / 2."""
    return m / 2.0


def eta_dot_limit_m_inf(p: float) -> float:
    """lim_{m -> infinity} eta = (1 + h(p)) / (2 h(p))."""
    h = binary_entropy(p)
    return (1.0 + h) / (2.0 * h)


def r_km_elementwise_bound(m: int, p: float) -> float:
    """Structured sum-rate upper bound for elementwise-DSBS inner products:
    m (1 + h(2p(1-p))) + 2."""
    return m * (1.0 + binary_entropy(2 * p * (1 - p))) + 2.0


def r_ah_dsbs(m: int, l: int, p: float) -> float:
    """Closed-form sum rate of the layered binning scheme for square products
    of elementwise-DSBS matrices: m l (1 + h(2p(1-p)))."""
    return m * l * (1.0 + binary_entropy(2 * p * (1 - p)))


def r_hk_dsbs(m: int, l: int, p: float) -> float:
    """Elementwise modulo-two binning baseline: 2 m l h(p)."""
    return 2 * m * l * binary_entropy(p)


def r_ah_enum(m: int, l: int, p: float) -> float:
    """Exact enumeration of H(A1,B2) + 2 max{H(U|A1,B2), H(W|A1,B2,U)}
    for the elementwise-DSBS model (even m), the quantity whose closed form
    is r_ah_dsbs."""
    model = SourceModel.elementwise_dsbs(m, l, p)
    f2 = FieldSpec(2)

    def parts(A, B):
        a = FqMatrix(f2, A)
        b = FqMatrix(f2, B)
        a1, a2, b1, b2 = sm.split_halves(a, b)
        U = a2 + b1
        W = (a1.T @ a2) + (b1.T @ b2)
        return a1, b2, U, W

    def side(A, B):
        a1, b2, _, _ = parts(A, B)
        return (a1.data.tobytes(), b2.data.tobytes())

    def side_u(A, B):
        a1, b2, U, _ = parts(A, B)
        return (a1.data.tobytes(), b2.data.tobytes(), U.data.tobytes())

    def side_uw(A, B):
        a1, b2, U, W = parts(A, B)
        return (a1.data.tobytes(), b2.data.tobytes(), U.data.tobytes(),
                W.data.tobytes())

    h_side = entropy_exact(model, side)
    h_u_given = entropy_exact(model, side_u) - h_side
    h_w_given = entropy_exact(model, side_uw) - entropy_exact(model, side_u)
    return h_side + 2 * max(h_u_given, h_w_given)


def rates_ternary_example(m: int, eps: float, p: float):
    """(R_SW, R_KM) closed forms for the correlated ternary two-column model."""
    r_sw = m * (binary_entropy(2 * eps) + (1 - 2 * eps) + binary_entropy(p))
    half = 0.5 - eps
    x = 2 * half * (1 - p) + 2 * eps * (1 - p)
    y = 2 * half * p + 2 * eps * p
    z = 1.0 - x - y
    r_km = 2 * m * _entropy_of_dist([x, y, z]) + 2 * math.log2(3)
    return r_sw, r_km


def closed_form_rates(scheme: str, m: int, l: int = 1, p: float = None,
                      eps: float = None) -> RatePoint:
    """Dispatch table used by the CLI; returns a populated RatePoint."""
    if scheme == "cross-dot":
        pt = RatePoint(scheme, m, 1, 2, p)
        pt.R_SW, pt.R_KM = r_sw_dot(m, p), r_km_dot(m, p)
        pt.eta = pt.R_SW / pt.R_KM
        return pt
    if scheme == "elementwise-dot":
        pt = RatePoint(scheme, m, 1, 2, p)
        pt.R_SW = r_sw_dot(m, p)
        pt.R_KM = r_km_elementwise_bound(m, p)
        return pt
    if scheme == "square-dsbs":
        pt = RatePoint(scheme, m, l, 2, p)
        pt.R_SW = m * l * (1.0 + binary_entropy(p))
        pt.R_AH = r_ah_dsbs(m, l, p)
        pt.R_HK = r_hk_dsbs(m, l, p)
        pt.gamma = multiplicative_gaps("square", p=p)
        return pt
    if scheme == "ternary-example":
        pt = RatePoint(scheme, m, 2, 3, p, eps)
        pt.R_SW, pt.R_KM = rates_ternary_example(m, eps, p)
        pt.eta = pt.R_SW / pt.R_KM
        return pt
    raise UnknownScheme(scheme)


# ---------------------------------------------------------------------------
# converses, gaps, product entropies
# ---------------------------------------------------------------------------

def converse_bounds(model: SourceModel, functional: Callable) -> float:
    """Cut-set style lower bound 2 H(f(A,B)) on the sum rate, in bits."""
    return 2.0 * entropy_exact(model, functional)


def multiplicative_gaps(kind: str, m: int = None, l: int = None,
                        p: float = None) -> float:
    """Upper bounds on the structured-over-optimal sum-rate ratio."""
    h = binary_entropy(p)
    if kind == "dot":
        return max(m * h, 1 - (1 - p) ** m) / (m * h)
    if kind == "outer":
        return max(l * h, float(l)) / (l * h)
    if kind == "symmetric":
        if m <= l - 1:
            raise OutOfRange("requires m > l - 1")
        return max(2 * m * h, l + 1.0) / (2 * (m - l + 1) * h)
    if kind == "square":
        return (1.0 + binary_entropy(2 * p * (1 - p))) / (2 * h)
    raise UnknownScheme(kind)


def product_entropy_qary(q: int, m: int, l: int) -> float:
    """H_q(A^T B) in q-ary units for independent uniform A, B (vectorized)."""
    n = q ** (m * l)
    if n * n > (1 << 24):
        raise ScaleExceeded(f"{q}^{2*m*l} pairs")
    grid = np.array(list(product(range(q), repeat=m * l)),
                    dtype=np.int64).reshape(n, m, l)
    D = np.einsum("ami,bmj->abij", grid, grid) % q
    # mixed-radix encode each product matrix to one integer
    codes = np.zeros((n, n), dtype=np.int64)
    for idx in range(l * l):
        codes = codes * q + D[:, :, idx // l, idx % l]
    counts = np.bincount(codes.ravel())
    counts = counts[counts > 0]
    total = counts.sum()
    probs = counts / total
    return float(-(probs * np.log2(probs)).sum() / math.log2(q))


def product_entropy_limit(m: int, l: int) -> float:
    """lim_{q->inf} H_q(A^T B) = 2 l min(m,l) - min(m,l)^2 (q-ary units)."""
    k = min(m, l)
    return 2 * l * k - k * k


def product_entropy_given_a(m: int, l: int) -> float:
    """H_q(A^T B | A) = min(l^2, l m) q-ary units in the uniform limit."""
    return float(min(l * l, l * m))


def eta_condition_check(model: SourceModel):
    """Necessary condition for structured gain on the dot scheme:
    H(D) + H(U,V | D) < H(A | U,V,D).  Returns (lhs, rhs, holds)."""
    f = FieldSpec(model.q)

    def msgs(A, B):
        d = sm.dot_messages(FqMatrix(f, A), FqMatrix(f, B))
        return (d.U.data.tobytes(), d.V.data.tobytes())

    def dot(A, B):
        return int((A.T @ B).sum() % model.q)

    def a_val(A, B):
        return A.tobytes()

    h_uvd = joint_entropy_exact(model, msgs, dot)
    h_auvd = joint_entropy_exact(model, a_val, msgs, dot)
    lhs = h_uvd  # = H(D) + H(U,V | D)
    rhs = h_auvd - h_uvd
    return lhs, rhs, lhs < rhs


# ---------------------------------------------------------------------------
# per-scheme message counts for symmetric products
# ---------------------------------------------------------------------------

def scheme_cost_tables(m: int, l: int) -> dict:
    """Message counts (field elements per source) and receiver multiply counts
    for the three pairwise symmetric-product schemes."""
    return {
        "pairwise": {
            "rate": (m + 1) * (l * l + l) / 2,
            "receiver_mults": m * (l * l + l) / 4,
        },
        "pairwise_sym": {
            "rate": m * l * (1 + l) / 2 + l,
            "receiver_mults": m * (l * l - l / 2),
        },
        "nested": {
            "rate": m * l * (l + 3) / 4 + l * (l + 1) / 2,
            "receiver_mults": m * l * (7 * l - 3) / 8,
        },
    }
