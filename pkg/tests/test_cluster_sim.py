import numpy as np
import pytest

from stcoded import cluster_sim as cs
from stcoded.errors import ConfigError, OutOfRange, UnknownScheme
from stcoded.gf_core import FieldSpec, FqMatrix
from stcoded.poly_codes import CodeSpec, CostReport


def _spec(family="PolyDot", N=15, q=97):
    return CodeSpec(family, q, m_A=4, m=4, N=N, s_r=2, s_c=2)


def _ab(spec, seed=0):
    rng = np.random.default_rng(seed)
    f = FieldSpec(spec.q)
    return (FqMatrix.random(f, spec.m_A, spec.m, rng),
            FqMatrix.random(f, spec.m_A, spec.m_B, rng))


def test_straggler_models():
    assert cs.StragglerModel().select(5) == (0, 1, 2, 3, 4)
    got = cs.StragglerModel("random_erasure", prob=0.5, seed=1).select(20)
    assert set(got) <= set(range(20)) and len(set(got)) == len(got)
    assert cs.StragglerModel("random_erasure", prob=1.0, seed=1).select(6) \
        == ()
    pinned = cs.StragglerModel("adversarial_subset", subset=(4, 1, 2))
    assert pinned.select(6) == (1, 2, 4)
    drawn = cs.StragglerModel("adversarial_subset", survivors=3, seed=2)
    assert len(drawn.select(10)) == 3
    with pytest.raises(UnknownScheme):
        cs.StragglerModel("typo")
    with pytest.raises(OutOfRange):
        cs.StragglerModel("random_erasure", prob=1.5)
    with pytest.raises(OutOfRange):
        cs.StragglerModel("adversarial_subset")
    with pytest.raises(OutOfRange):
        pinned.select(3)
    with pytest.raises(OutOfRange):
        cs.StragglerModel("adversarial_subset", survivors=4).select(3)


def test_run_experiment_success_and_failure():
    spec = _spec()
    A, B = _ab(spec)
    res, cost = cs.run_experiment(spec, (A, B))
    assert res == A.T @ B and cost.success
    few = cs.StragglerModel("adversarial_subset",
                            subset=tuple(range(spec.threshold - 1)))
    res, cost = cs.run_experiment(spec, (A, B), few)
    assert res is None and not cost.success
    exact = cs.StragglerModel("adversarial_subset",
                              subset=tuple(range(3, 3 + spec.threshold)))
    res, cost = cs.run_experiment(spec, (A, B), exact)
    assert res == A.T @ B
    with pytest.raises(UnknownScheme):
        cs.run_experiment(object(), (A, B))


@pytest.mark.parametrize("family", ("Poly", "StPoly", "MatDot", "StMatDot",
                                    "PolyDot", "StPolyDotSym",
                                    "StPolyDotGen"))
def test_instrumented_counts_match_closed_forms(family):
    q = 97
    if family in ("StMatDot", "StPolyDotSym"):
        spec = CodeSpec(family, q, m_A=8, m=4, N=20, s_r=2, s_c=1)
        rng = np.random.default_rng(3)
        A = FqMatrix.random(FieldSpec(q), 8, 4, rng)
        B = A.scale(5)
    else:
        spec = CodeSpec(family, q, m_A=8, m=4, N=20, s_r=2, s_c=2) \
            if family in ("PolyDot", "StPolyDotGen") \
            else CodeSpec(family, q, m_A=8, m=4, N=20, s_r=2, s_c=1)
        A, B = _ab(spec, seed=4)
    res, cost = cs.run_experiment(spec, (A, B))
    assert res == A.T @ B
    assert cost.same_counts(cs.cost_closed_forms(spec))


def test_gain_ratios_regimes():
    g = cs.gain_ratios(m_A=1024, m=4, s_r=1, s_c=8, N=70)
    assert abs(g["eta_storage"] - 2.0) < 0.1
    g = cs.gain_ratios(m_A=1000, m=4, s_r=1, s_c=4, N=16)
    assert 1.9 <= g["eta_comm"] <= 2.0
    for s in (2, 4, 8):
        for m in (8, 16, 32):
            g = cs.gain_ratios(m_A=m, m=m, s_r=s, s_c=1, N=2 * s)
            assert g["chi_comp_realized"] <= g["chi_comp_bound"] + 1e-12
    with pytest.raises(OutOfRange):
        cs.gain_ratios(0, 4, 1, 1, 4)
    with pytest.raises(ConfigError):
        cs.gain_ratios(4, 4, 2, 2, 5)


def test_runner_registry_extension():
    class Dummy:
        N = 3

    cs.register_runner(Dummy, lambda spec, inputs, survivors, cost: None)
    res, cost = cs.run_experiment(Dummy(), ())
    assert res is None and not cost.success
    del cs._RUNNERS[Dummy]
