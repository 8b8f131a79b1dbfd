import numpy as np
import pytest

from stcoded import chain_codes as cc
from stcoded import cluster_sim as cs
from stcoded.errors import (
    ConfigError,
    DivisibilityViolation,
    InsufficientOutputs,
    OutOfRange,
    UnknownScheme,
)
from stcoded.gf_core import FieldSpec, FqMatrix

Q3, Q4 = 53, 101


def _mats(q, m, count, seed=0):
    rng = np.random.default_rng(seed)
    f = FieldSpec(q)
    return tuple(FqMatrix.random(f, m, m, rng) for _ in range(count))


def test_threshold_formulas():
    assert cc.chain_thresholds(2, 2, 2) == 12
    assert cc.chain_thresholds(3, 2, 1, "recursive") == 6
    assert cc.chain_thresholds(4, 2, 1, "recursive") == 6
    assert cc.chain_thresholds(3, 2, 2, "hierarchical") == 12
    with pytest.raises(DivisibilityViolation):
        cc.chain_thresholds(3, 3, 1, "recursive")
    with pytest.raises(UnknownScheme):
        cc.chain_thresholds(3, 2, 1, "typo")
    with pytest.raises(OutOfRange):
        cc.chain_thresholds(5, 2, 1, "hierarchical")


def test_points_required_dominates_thresholds():
    for s_r in (2, 4):
        for s_c in (1, 2):
            for n in (3, 4):
                assert cc.chain_points_required(n, s_r, s_c) \
                    >= cc.chain_thresholds(n, s_r, s_c, "hierarchical")


def test_job_validation():
    mats = _mats(Q3, 4, 3)
    with pytest.raises(UnknownScheme):
        cc.ChainJob(mats, "typo", Q3, 4, 40, s_r=2, s_c=1)
    with pytest.raises(DivisibilityViolation):
        cc.ChainJob(_mats(Q3, 6, 3), "recursive", Q3, 6, 40, s_r=2, s_c=1)
    with pytest.raises(ConfigError):
        cc.ChainJob(mats, "recursive", Q3, 4, 4, s_r=2, s_c=1)  # N too small
    with pytest.raises(OutOfRange):
        cc.ChainJob(_mats(Q3, 4, 5), "recursive", Q3, 4, 40, s_r=2, s_c=1)


def test_recursive_chain3_matches_direct_product():
    job = cc.ChainJob(_mats(Q3, 4, 3, seed=1), "recursive", Q3, 4, 40,
                      s_r=2, s_c=1)
    assert cc.chain3_recursive(job) == job.direct_product()


def test_recursive_chain4_matches_direct_product():
    job = cc.ChainJob(_mats(Q4, 4, 4, seed=2), "recursive", Q4, 4, 40,
                      s_r=2, s_c=1)
    assert cc.chain4_recursive(job) == job.direct_product()


def test_hierarchical_all_lengths():
    for count, q in ((2, Q3), (3, Q3), (4, Q4)):
        job = cc.ChainJob(_mats(q, 4, count, seed=count), "hierarchical",
                          q, 4, 12, s_r=2, s_c=1)
        assert cc.chain_hierarchical(job) == job.direct_product()


def test_chain_decode_subset_and_failures():
    job = cc.ChainJob(_mats(Q3, 4, 3, seed=3), "recursive", Q3, 4, 40,
                      s_r=2, s_c=1)
    bundles = cc.chain3_encode(job)
    outs = [cc.chain3_worker(job, b) for b in bundles]
    need = job.min_workers
    # an arbitrary distinct subset of exactly `need` outputs decodes
    assert cc.chain3_decode(job, outs[5:5 + need]) == job.direct_product()
    with pytest.raises(InsufficientOutputs):
        cc.chain3_decode(job, outs[:need - 1])
    with pytest.raises(InsufficientOutputs):
        cc.chain3_decode(job, [outs[0]] * need)


def test_chain_costs_match_closed_forms():
    from stcoded.poly_codes import CostReport
    job3 = cc.ChainJob(_mats(Q3, 4, 3, seed=4), "recursive", Q3, 4, 40,
                       s_r=2, s_c=1)
    c = CostReport()
    cc.chain3_recursive(job3, cost=c)
    assert c.same_counts(cc.chain_cost_closed_forms(job3))
    job4 = cc.ChainJob(_mats(Q4, 4, 4, seed=5), "recursive", Q4, 4, 40,
                       s_r=2, s_c=1)
    c = CostReport()
    cc.chain4_recursive(job4, cost=c)
    assert c.same_counts(cc.chain_cost_closed_forms(job4))
    with pytest.raises(ConfigError):
        cc.chain_cost_closed_forms(
            cc.ChainJob(_mats(Q3, 4, 3, seed=6), "hierarchical", Q3, 4, 12,
                        s_r=2, s_c=1))


def test_chain_jobs_run_under_harness():
    job = cc.ChainJob(_mats(Q4, 4, 4, seed=7), "recursive", Q4, 4, 40,
                      s_r=2, s_c=1)
    res, cost = cs.run_experiment(job, ())
    assert res == job.direct_product() and cost.success
    few = cs.StragglerModel("adversarial_subset",
                            subset=tuple(range(job.min_workers - 1)))
    res, cost = cs.run_experiment(job, (), few)
    assert res is None and not cost.success
