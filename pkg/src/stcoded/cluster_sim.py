"""Master-workers-receiver simulation harness.

Runs a coded job end to end under a straggler model and reports operation
counters; `cost_closed_forms` evaluates the per-family cost-table cells with
the same counting conventions, so instrumented runs can be checked against
them with exact integer equality.  `gain_ratios` evaluates the
storage/communication/computation ratios between the halved-message grid
code and its purely linear counterpart.

Stragglers are erasures, not delays: the guarantees under test are
threshold-based, so only the surviving set matters.  run_experiment never
returns a wrong product — with fewer survivors than the recovery threshold
it reports failure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DegenerateDenominator, OutOfRange, UnknownScheme
from .gf_core import FqMatrix
from .poly_codes import (
    CodeSpec,
    CostReport,
    master_encode,
    receiver_decode,
    worker_compute,
)


@dataclass(frozen=True)
class StragglerModel:
    """Which workers survive.  kinds:

    none                      all N workers respond
    random_erasure            each worker erased independently w.p. prob
    adversarial_subset        exactly `survivors` respond; `subset` pins the
                              surviving indices, otherwise a seeded draw
    """
    kind: str = "none"
    prob: float = 0.0
    survivors: Optional[int] = None
    subset: Optional[Tuple[int, ...]] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "random_erasure", "adversarial_subset"):
            raise UnknownScheme(self.kind)
        if self.kind == "random_erasure" and not 0.0 <= self.prob <= 1.0:
            raise OutOfRange(f"erasure prob {self.prob}")
        if self.kind == "adversarial_subset":
            count = len(self.subset) if self.subset is not None \
                else self.survivors
            if count is None or count < 0:
                raise OutOfRange("survivor count must be >= 0")

    def select(self, n_workers: int) -> Tuple[int, ...]:
        if self.kind == "none":
            return tuple(range(n_workers))
        rng = np.random.default_rng(self.seed)
        if self.kind == "random_erasure":
            keep = rng.random(n_workers) >= self.prob
            return tuple(int(i) for i in np.nonzero(keep)[0])
        if self.subset is not None:
            bad = [i for i in self.subset if not 0 <= i < n_workers]
            if bad or len(set(self.subset)) != len(self.subset):
                raise OutOfRange(f"invalid survivor subset {self.subset}")
            return tuple(sorted(self.subset))
        if self.survivors > n_workers:
            raise OutOfRange(f"{self.survivors} survivors > {n_workers}")
        picked = rng.choice(n_workers, size=self.survivors, replace=False)
        return tuple(int(i) for i in sorted(picked))


# Spec-type -> runner(spec, inputs, surviving indices, cost) -> result.
# poly-code jobs are registered here; chain and secure jobs register their
# own runner on import.
_RUNNERS: Dict[type, Callable] = {}


def register_runner(spec_type: type, fn: Callable):
    _RUNNERS[spec_type] = fn


def _run_poly(spec: CodeSpec, inputs, survivors, cost: CostReport):
    A, B = inputs
    bundles = master_encode(spec, A, B, cost)
    outputs = [worker_compute(spec, bundles[i], cost) for i in survivors]
    if len(outputs) < spec.threshold:
        return None
    return receiver_decode(spec, outputs, cost)


register_runner(CodeSpec, _run_poly)


def run_experiment(spec, inputs: Sequence[FqMatrix],
                   straggler: StragglerModel = None
                   ) -> Tuple[Optional[FqMatrix], CostReport]:
    """Execute one coded job; returns (result, CostReport).

    result is None — and cost.success False — when the survivors fall below
    the recovery threshold; on success it is the exact product.
    """
    runner = _RUNNERS.get(type(spec))
    if runner is None:
        raise UnknownScheme(f"no runner registered for {type(spec).__name__}")
    straggler = straggler or StragglerModel()
    cost = CostReport()
    survivors = straggler.select(spec.N)
    result = runner(spec, tuple(inputs), survivors, cost)
    cost.success = result is not None
    return result, cost


# ---------------------------------------------------------------------------
# closed-form cost-table cells
# ---------------------------------------------------------------------------

def cost_closed_forms(spec: CodeSpec) -> CostReport:
    """Evaluate every cost-table cell for the family of `spec`, under the
    same counting conventions as the instrumented pipeline: a full
    no-straggler run with all N workers computing and the receiver decoding
    once from threshold outputs."""
    fam = spec.family
    N, m_A, m, m_B = spec.N, spec.m_A, spec.m, spec.m_B
    s_r, s_c = spec.s_r, spec.s_c
    s = s_r * s_c
    thr = spec.threshold
    src = m_A * (m + m_B)
    if fam == "Poly":
        per_storage = 2 * m_A
        per_master = m_A * (m + m_B)
        per_worker = m_A
        out = 1
    elif fam == "StPoly":
        per_storage = m_A + 1
        per_master = m_A * (m + m_B) + 2 * m_A + 1
        per_worker = m_A // 2 + 1
        out = 1
    elif fam == "MatDot":
        per_storage = 2 * m_A * m // s
        per_master = 2 * m_A * m
        per_worker = m_A * m * m // s
        out = m * m
    elif fam == "StMatDot":
        per_storage = m_A * m // s + m * m
        per_master = (2 * m_A * m + m_A * m // s
                      + m_A * m * m // s + m * m)
        per_worker = m_A * m * m // (2 * s) + m * m
        out = m * m
    elif fam == "PolyDot":
        per_storage = 2 * m_A * m // (s_r * s_c)
        per_master = 2 * m_A * m
        per_worker = m_A * m * m // (s_r * s_c * s_c)
        out = m * m // (s_c * s_c)
    elif fam == "StPolyDotSym":
        per_storage = m_A * m // (s_r * s_c) + m * m // (s_c * s_c)
        per_master = (2 * m_A * m + m_A * m // (s_r * s_c)
                      + m_A * m * m // (s_r * s_c * s_c)
                      + m * m // (s_c * s_c))
        per_worker = (m_A * m * m // (2 * s_r * s_c * s_c)
                      + m * m // (s_c * s_c))
        out = m * m // (s_c * s_c)
    elif fam == "StPolyDotGen":
        per_storage = 3 * m_A * m // (2 * s_r * s_c) + m * m // (s_c * s_c)
        per_master = (2 * m_A * m + m_A * m // (2 * s_r * s_c)
                      + m_A * m * m // (s_r * s_c * s_c)
                      + m * m // (s_c * s_c))
        per_worker = (m_A * m * m // (s_r * s_c * s_c)
                      + 2 * m * m // (s_c * s_c))
        out = m * m // (s_c * s_c)
    else:
        raise UnknownScheme(fam)
    return CostReport(
        family=fam,
        threshold=thr,
        master_storage=2 * src if fam in ("Poly", "StPoly") else src,
        master_comp=N * per_master,
        master_comm=N * per_storage,
        worker_storage=N * per_storage,
        worker_comp=N * per_worker,
        worker_comm=thr * out,
        receiver_comp=thr * out + thr ** 3,
    )


# ---------------------------------------------------------------------------
# gain ratios (halved-message grid code vs purely linear grid code)
# ---------------------------------------------------------------------------

def _total_comm(fam, m_A, m, s_r, s_c, N):
    if fam == "PolyDot":
        per_storage = 2 * m_A * m / (s_r * s_c)
    else:
        per_storage = m_A * m / (s_r * s_c) + m * m / (s_c * s_c)
    return N * per_storage + (2 * s_r - 1) * m * m


def _total_comp(fam, m_A, m, s_r, s_c, N):
    if fam == "PolyDot":
        master = 2 * m_A * m
        worker = m_A * m * m / (s_r * s_c * s_c)
    else:
        master = (2 * m_A * m + m_A * m / (s_r * s_c)
                  + m_A * m * m / (s_r * s_c * s_c)
                  + m * m / (s_c * s_c))
        worker = (m_A * m * m / (2 * s_r * s_c * s_c)
                  + m * m / (s_c * s_c))
    return N * (master + worker)


def gain_ratios(m_A: int, m: int, s_r: int, s_c: int, N: int) -> dict:
    """Storage, communication, and computation ratios between the purely
    linear grid code and its halved-message variant:

      eta_storage        per-worker storage ratio 2 m_A / (m_A + m s_r/s_c)
      eta_comm           realized total-communication ratio (linear/halved)
      chi_comp_realized  realized total-computation ratio (halved/linear)
      chi_comp_bound     1 + (s_c + 5m/2) / (2 s s_c + m)
    """
    if min(m_A, m, s_r, s_c, N) < 1:
        raise OutOfRange("parameters must be positive")
    if N < (2 * s_r - 1) * s_c * s_c:
        raise ConfigError("N below the grid recovery threshold")
    s = s_r * s_c
    denom = m_A + m * s_r / s_c
    if denom == 0:
        raise DegenerateDenominator("storage ratio denominator")
    eta_storage = 2 * m_A / denom
    eta_comm = (_total_comm("PolyDot", m_A, m, s_r, s_c, N)
                / _total_comm("StPolyDotSym", m_A, m, s_r, s_c, N))
    chi = (_total_comp("StPolyDotSym", m_A, m, s_r, s_c, N)
           / _total_comp("PolyDot", m_A, m, s_r, s_c, N))
    bound = 1 + (s_c + 2.5 * m) / (2 * s * s_c + m)
    return {
        "eta_storage": eta_storage,
        "eta_comm": eta_comm,
        "chi_comp_realized": chi,
        "chi_comp_bound": bound,
    }
