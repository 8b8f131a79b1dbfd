"""Linear syndrome codes for modulo-sum recovery, with exact ML decoding.

Both encoders apply the same parity matrix C to their length-n source
sequences; the receiver adds the syndromes over F_q and ML-decodes the
difference/sum sequence from its coset.  Decoding enumerates the full
ambient space (bounded to q^n <= 2^22), so the error probabilities measured
here are exact ML, not approximations.

Error monotonicity in kappa is made exact per trial by drawing one n x n
parity matrix and using its top-kappa rows (nested codes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Sequence

import numpy as np

from .errors import LengthMismatch, OutOfRange, ScaleExceeded, ShapeMismatch
from .gf_core import FieldSpec, FqMatrix
from . import source_maps as sm
from .rate_lab import SourceModel, binary_entropy

_MAX_WORDS = 1 << 22


@dataclass
class ParityMatrix:
    q: int
    C: np.ndarray  # kappa x n

    def __post_init__(self):
        FieldSpec(self.q)  # validates primality
        self.C = np.asarray(self.C, dtype=np.int64) % self.q
        if self.C.ndim != 2:
            raise ShapeMismatch("parity matrix must be 2-D")

    @property
    def kappa(self) -> int:
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @classmethod
    def random(cls, n: int, kappa: int, q: int,
               rng: np.random.Generator) -> "ParityMatrix":
        if not 0 <= kappa <= n:
            raise OutOfRange(f"kappa={kappa} outside [0, {n}]")
        return cls(q, rng.integers(0, q, size=(kappa, n)))

    def prefix(self, kappa: int) -> "ParityMatrix":
        if kappa > self.kappa:
            raise OutOfRange(f"prefix {kappa} > {self.kappa}")
        return ParityMatrix(self.q, self.C[:kappa])


def km_encode(pm: ParityMatrix, x: Sequence[int]) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64) % pm.q
    if x.shape != (pm.n,):
        raise LengthMismatch(f"expected length {pm.n}, got {x.shape}")
    return (pm.C @ x) % pm.q


@lru_cache(maxsize=8)
def _all_words(q: int, n: int) -> np.ndarray:
    if q ** n > _MAX_WORDS:
        raise ScaleExceeded(f"{q}^{n} candidate words")
    words = np.zeros((q ** n, n), dtype=np.int64)
    idx = np.arange(q ** n)
    for pos in range(n - 1, -1, -1):
        words[:, pos] = idx % q
        idx //= q
    return words


def _log_priors(words: np.ndarray, pmf: np.ndarray) -> np.ndarray:
    """Sum of per-position log-probabilities; pmf is (q,) iid or (n, q)."""
    pmf = np.asarray(pmf, dtype=float)
    with np.errstate(divide="ignore"):
        logp = np.log(pmf)
    if pmf.ndim == 1:
        return logp[words].sum(axis=1)
    return logp[np.arange(words.shape[1])[None, :], words].sum(axis=1)


def km_decode_ml(pm: ParityMatrix, syndrome: Sequence[int],
                 pmf: Sequence[float]) -> np.ndarray:
    """Exact ML decoding of z from its syndrome C z.

    pmf is the per-symbol prior, either a length-q vector (iid) or an (n, q)
    matrix of per-position priors.  Ties break to the lexicographically
    smallest candidate.
    """
    words = _all_words(pm.q, pm.n)
    syndrome = np.asarray(syndrome, dtype=np.int64) % pm.q
    match = np.all((words @ pm.C.T) % pm.q == syndrome[None, :], axis=1)
    idxs = np.nonzero(match)[0]
    scores = _log_priors(words[idxs], np.asarray(pmf, dtype=float))
    return words[idxs[int(np.argmax(scores))]].copy()


@dataclass
class KmTrialReport:
    n: int
    kappa: int
    q: int
    p: float
    trials: int
    empirical_error: float
    rate_margin: float
    seed: int

    CSV_FIELDS = ("n", "kappa", "q", "p", "trials", "empirical_error",
                  "rate_margin", "seed")

    def as_row(self):
        return [getattr(self, k) for k in self.CSV_FIELDS]


def km_simulate(n: int, kappas: Sequence[int], p: float, trials: int,
                seed: int, q: int = 2) -> List[KmTrialReport]:
    """Monte-Carlo ML error rates for Bern(p) difference sequences over F_2.

    One fresh n x n parity matrix per trial; each kappa uses its top rows, so
    the empirical error is non-increasing in kappa trial by trial.
    """
    if q != 2:
        raise OutOfRange("simulation model is binary (z ~ Bern(p))")
    rng = np.random.default_rng(seed)
    words = _all_words(2, n)
    weights = words.sum(axis=1)
    with np.errstate(divide="ignore"):
        scores_by_w = weights * np.log(p) + (n - weights) * np.log(1 - p) \
            if 0 < p < 1 else np.where(weights == 0, 0.0, -np.inf) \
            if p == 0 else np.where(weights == n, 0.0, -np.inf)
    errors = {k: 0 for k in kappas}
    kmax = max(kappas)
    for _ in range(trials):
        C = rng.integers(0, 2, size=(kmax, n))
        z = (rng.random(n) < p).astype(np.int64)
        synd_full = (words @ C.T) % 2
        s_true = (C @ z) % 2
        for k in kappas:
            match = np.all(synd_full[:, :k] == s_true[None, :k], axis=1)
            idxs = np.nonzero(match)[0]
            best = idxs[int(np.argmax(scores_by_w[idxs]))]
            if not np.array_equal(words[best], z):
                errors[k] += 1
    h = binary_entropy(p)
    return [KmTrialReport(n, k, 2, p, trials, errors[k] / trials,
                          k / n - h, seed) for k in kappas]


def _dot_components(A: np.ndarray, B: np.ndarray, q: int):
    """Per-source component vectors whose modulo sums are the three dot
    messages: [A2; A1; A2^T A1] and [B1; B2; B1^T B2]."""
    f = FieldSpec(q)
    a = FqMatrix(f, A)
    b = FqMatrix(f, B)
    a1, a2, b1, b2 = sm.split_halves(a, b)
    x1 = np.concatenate([a2.data[:, 0], a1.data[:, 0],
                         [(a2.T @ a1).item()]]).astype(np.int64)
    x2 = np.concatenate([b1.data[:, 0], b2.data[:, 0],
                         [(b1.T @ b2).item()]]).astype(np.int64)
    return x1, x2


def km_pipeline_dot(model: SourceModel, n: int, kappa: int, trials: int,
                    seed: int) -> dict:
    """End-to-end structured pipeline: n i.i.d. draws from the source model,
    per-component syndrome encoding with a shared parity matrix, exact ML
    decoding of each modulo-sum component sequence with its exact marginal
    prior, then inner-product recovery per draw.

    Returns a report dict with the empirical block (dot) error rate.
    """
    if model.q != 2 or model.l != 1:
        raise OutOfRange("pipeline is defined for binary vector sources")
    m = model.m
    if m % 2:
        raise OutOfRange("even m required (component layout)")
    ncomp = m + 1
    # exact marginal priors of each modulo-sum component
    p1 = np.zeros(ncomp)
    for A, B, pr in model.worlds():
        x1, x2 = _dot_components(A[:, :1], B[:, :1], 2)
        z = (x1 + x2) % 2
        p1 += pr * z
    pmfs = np.stack([1 - p1, p1], axis=1)  # (ncomp, 2)

    rng = np.random.default_rng(seed)
    f2 = FieldSpec(2)
    block_errors = 0
    for _ in range(trials):
        pm = ParityMatrix.random(n, kappa, 2, rng)
        draws = [model.sample(rng) for _ in range(n)]
        comps1 = np.stack([_dot_components(a, b, 2)[0] for a, b in draws])
        comps2 = np.stack([_dot_components(a, b, 2)[1] for a, b in draws])
        # syndromes add over F_2; decode each component sequence
        z_hat = np.zeros((n, ncomp), dtype=np.int64)
        ok = True
        for c in range(ncomp):
            s = (km_encode(pm, comps1[:, c]) + km_encode(pm, comps2[:, c])) % 2
            z_hat[:, c] = km_decode_ml(pm, s, pmfs[c])
        for t, (a, b) in enumerate(draws):
            h = m // 2
            U = FqMatrix(f2, z_hat[t, :h].reshape(-1, 1))
            V = FqMatrix(f2, z_hat[t, h:m].reshape(-1, 1))
            msgs = sm.DotMessages(2, m, U, V, int(z_hat[t, m]))
            truth = int((a[:, 0] @ b[:, 0]) % 2)
            if sm.dot_decode(msgs) != truth:
                ok = False
                break
        if not ok:
            block_errors += 1
    return {
        "n": n, "kappa": kappa, "q": 2, "m": m, "trials": trials,
        "block_error": block_errors / trials, "seed": seed,
    }
