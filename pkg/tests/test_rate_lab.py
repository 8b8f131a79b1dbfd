import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stcoded import rate_lab as rl
from stcoded import source_maps as sm
from stcoded.errors import OutOfRange, ScaleExceeded, UnknownScheme
from stcoded.gf_core import FieldSpec, FqMatrix


def test_binary_entropy_endpoints_and_symmetry():
    assert rl.binary_entropy(0.0) == 0.0
    assert rl.binary_entropy(1.0) == 0.0
    assert rl.binary_entropy(0.5) == 1.0
    assert rl.binary_entropy(0.25) == pytest.approx(0.8112781244591328,
                                                    abs=1e-12)
    assert rl.binary_entropy(0.1) == pytest.approx(rl.binary_entropy(0.9),
                                                   abs=1e-12)


def _km_sum_functional(q):
    f = FieldSpec(q)

    def z(A, B):
        d = sm.dot_messages(FqMatrix(f, A), FqMatrix(f, B))
        return (d.U.data.tobytes(), d.V.data.tobytes(), d.W)
    return z


def test_structured_dot_rate_matches_enumeration_m2():
    # closed form 2 m h(p) + 2 (1-(1-p)^m) against exact message entropy
    for p in (0.05, 0.3):
        model = rl.SourceModel.asym_cross_dsbs(2, p)
        exact = 2.0 * rl.entropy_exact(model, _km_sum_functional(2))
        assert rl.r_km_dot(2, p) == pytest.approx(exact, abs=1e-9)


def test_sw_rate_is_joint_entropy():
    for p in (0.1, 0.3):
        model = rl.SourceModel.asym_cross_dsbs(3, p)
        joint = rl.joint_entropy_exact(model, lambda A, B: A.tobytes(),
                                       lambda A, B: B.tobytes())
        assert rl.r_sw_dot(3, p) == pytest.approx(joint, abs=1e-9)


def test_eta_limits():
    assert rl.eta_dot_limit_p1(6) == 3.0
    # monotone approach of eta to its large-m limit
    for p in (0.2, 0.4):
        lim = rl.eta_dot_limit_m_inf(p)
        assert abs(rl.eta_dot(400, p) - lim) < abs(rl.eta_dot(50, p) - lim)


def test_elementwise_bound_formula():
    # m(1+h(2p(1-p))) + 2, evaluated directly
    p, m = 0.2, 3
    expect = m * (1 + rl.binary_entropy(2 * p * (1 - p))) + 2
    assert rl.r_km_elementwise_bound(m, p) == pytest.approx(expect,
                                                            abs=1e-12)


def test_ah_closed_form_vs_enumeration():
    for p in (0.1, 0.3):
        assert rl.r_ah_enum(2, 2, p) == pytest.approx(rl.r_ah_dsbs(2, 2, p),
                                                      abs=1e-9)


def test_ternary_example_rates():
    r_sw, r_km = rl.rates_ternary_example(4, 0.1, 0.2)
    assert r_sw > 0 and r_km > 0
    model = rl.SourceModel.correlated_ternary(2, 0.1, 0.2)
    joint = rl.joint_entropy_exact(model, lambda A, B: A.tobytes(),
                                   lambda A, B: B.tobytes())
    assert rl.rates_ternary_example(2, 0.1, 0.2)[0] == pytest.approx(
        joint, abs=1e-9)


def test_closed_form_rates_dispatch():
    pt = rl.closed_form_rates("cross-dot", 4, p=0.2)
    assert pt.eta == pytest.approx(pt.R_SW / pt.R_KM)
    pt = rl.closed_form_rates("square-dsbs", 4, l=2, p=0.2)
    assert pt.R_AH == pytest.approx(rl.r_ah_dsbs(4, 2, 0.2))
    with pytest.raises(UnknownScheme):
        rl.closed_form_rates("nope", 2, p=0.1)


def test_multiplicative_gaps():
    assert rl.multiplicative_gaps("square", p=0.499) == pytest.approx(
        1.0, abs=1e-3)
    assert rl.multiplicative_gaps("dot", m=4, p=0.3) >= 1.0
    assert rl.multiplicative_gaps("outer", l=3, p=0.3) >= 1.0
    with pytest.raises(OutOfRange):
        rl.multiplicative_gaps("symmetric", m=1, l=3, p=0.3)


def test_product_entropy_monotone_in_q():
    vals = [rl.product_entropy_qary(q, 2, 2) for q in (3, 5, 7)]
    assert vals[0] < vals[1] < vals[2] < rl.product_entropy_limit(2, 2)
    assert rl.product_entropy_limit(2, 2) == 4
    assert rl.product_entropy_given_a(3, 2) == 4
    with pytest.raises(ScaleExceeded):
        rl.product_entropy_qary(101, 4, 4)


def test_product_entropy_small_oracle():
    # independent brute-force oracle at q=2, m=l=1: P(ab=1)=1/4
    got = rl.product_entropy_qary(2, 1, 1)
    expect = rl.binary_entropy(0.25)
    assert got == pytest.approx(expect, abs=1e-12)


def test_eta_condition_check_runs():
    lhs, rhs, holds = rl.eta_condition_check(
        rl.SourceModel.asym_cross_dsbs(2, 0.05))
    assert lhs >= 0 and rhs >= 0 and isinstance(holds, bool)


def test_scheme_cost_tables_frozen():
    t = rl.scheme_cost_tables(4, 2)
    assert t["pairwise"]["rate"] == 15.0
    assert t["pairwise"]["receiver_mults"] == 6.0
    assert t["pairwise_sym"]["rate"] == 14.0
    assert t["pairwise_sym"]["receiver_mults"] == 12.0
    assert t["nested"]["rate"] == 13.0
    assert t["nested"]["receiver_mults"] == 11.0


@given(m=st.integers(1, 6), p=st.floats(0.01, 0.99))
@settings(max_examples=60, deadline=None)
def test_rate_formulas_positive_and_ordered(m, p):
    assert rl.r_sw_dot(m, p) > 0
    assert rl.r_km_dot(m, p) > 0
    assert rl.r_hk_dsbs(m, 2, p) <= 2 * m * 2 + 1e-12


def test_worlds_probabilities_sum_to_one():
    for model in (rl.SourceModel.asym_cross_dsbs(3, 0.2),
                  rl.SourceModel.elementwise_dsbs(2, 2, 0.3),
                  rl.SourceModel.correlated_ternary(2, 0.1, 0.2),
                  rl.SourceModel.uniform(3, 2, 1)):
        total = sum(pr for _, _, pr in model.worlds())
        assert total == pytest.approx(1.0, abs=1e-9)
