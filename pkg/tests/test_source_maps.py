import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stcoded import source_maps as sm
from stcoded.errors import (
    DivisibilityViolation,
    EvenFieldDivision,
    LengthMismatch,
    NoConsistentK,
    ShapeMismatch,
)
from stcoded.gf_core import FieldSpec, FqMatrix


def _rand(f, r, c, rng):
    return FqMatrix.random(f, r, c, rng)


@given(q=st.sampled_from([2, 3, 5, 7]), m=st.integers(1, 8),
       seed=st.integers(0, 300))
@settings(max_examples=120, deadline=None)
def test_dot_scheme_property(q, m, seed):
    f = FieldSpec(q)
    rng = np.random.default_rng(seed)
    a, b = _rand(f, m, 1, rng), _rand(f, m, 1, rng)
    assert sm.dot_decode(sm.dot_messages(a, b)) == (a.T @ b).item()


@given(q=st.sampled_from([2, 3, 5, 7]), m=st.integers(1, 8),
       seed=st.integers(0, 300))
@settings(max_examples=120, deadline=None)
def test_embed_dot_property(q, m, seed):
    f = FieldSpec(q)
    rng = np.random.default_rng(seed)
    a, b = _rand(f, m, 1, rng), _rand(f, m, 1, rng)
    assert sm.embed_dot_decode(*sm.embed_dot_messages(a, b)) \
        == (a.T @ b).item()


def test_embed_dot_rejects_unproducible_messages():
    # q=5, m=2: entry sums above 2(q-1)=8 cannot arise from valid inputs
    with pytest.raises(NoConsistentK):
        sm.embed_dot_decode([9, 0], 0, 2, 5)
    # q=2: parity mismatch between elementwise sums and the aggregate
    with pytest.raises(NoConsistentK):
        sm.embed_dot_decode([1, 0], 0, 2, 2)
    with pytest.raises(LengthMismatch):
        sm.embed_dot_decode([0], 0, 2, 5)


def test_matvec_scheme():
    rng = np.random.default_rng(5)
    for q in (2, 3, 7):
        f = FieldSpec(q)
        for m, l in ((2, 1), (4, 3), (8, 2)):
            A, b = _rand(f, m, l, rng), _rand(f, m, 1, rng)
            assert sm.matvec_decode(sm.matvec_messages(A, b)) == A.T @ b
    with pytest.raises(ShapeMismatch):
        sm.matvec_messages(_rand(FieldSpec(3), 4, 2, rng),
                           _rand(FieldSpec(3), 4, 2, rng))


def test_symmetric_schemes_on_symmetric_products():
    rng = np.random.default_rng(6)
    for q in (3, 5, 7):
        f = FieldSpec(q)
        for variant in ("cross", "symmetrized"):
            for m, l in ((2, 2), (6, 3)):
                A = _rand(f, m, l, rng)
                B = A.scale(int(rng.integers(1, q)))  # A^T B symmetric
                got = sm.symmetric_decode(sm.symmetric_messages(A, B, variant))
                assert got == A.T @ B


def test_symmetric_decode_needs_odd_q():
    rng = np.random.default_rng(7)
    A = _rand(FieldSpec(2), 4, 2, rng)
    with pytest.raises(EvenFieldDivision):
        sm.symmetric_decode(sm.symmetric_messages(A, A))


def test_square_schemes():
    rng = np.random.default_rng(8)
    for q in (3, 5, 7):
        f = FieldSpec(q)
        for m, l in ((2, 2), (5, 3)):
            A, B = _rand(f, m, l, rng), _rand(f, m, l, rng)
            assert sm.square_embed_decode(sm.square_embed_messages(A, B)) \
                == A.T @ B
    for q in (2, 3, 7):
        f = FieldSpec(q)
        A, B = _rand(f, 6, 3, rng), _rand(f, 6, 3, rng)
        assert sm.square_ah_decode(*sm.square_ah_messages(A, B)) == A.T @ B


@given(q=st.sampled_from([2, 3, 5, 7]), m=st.sampled_from([2, 4, 6, 8]),
       l=st.integers(1, 3), seed=st.integers(0, 300))
@settings(max_examples=100, deadline=None)
def test_recursive_scheme_property(q, m, l, seed):
    f = FieldSpec(q)
    rng = np.random.default_rng(seed)
    A, B = _rand(f, m, l, rng), _rand(f, m, l, rng)
    assert sm.recursive_decode(sm.recursive_messages(A, B)) == A.T @ B


def test_recursive_symmetric_and_nested():
    rng = np.random.default_rng(9)
    for q in (3, 5, 7):
        f = FieldSpec(q)
        for m, l in ((4, 2), (8, 3)):
            A = _rand(f, m, l, rng)
            B = A.scale(int(rng.integers(1, q)))
            assert sm.recursive_decode(sm.recursive_sym_messages(A, B)) \
                == A.T @ B
            assert sm.recursive_decode(sm.nested_messages(A, B)) == A.T @ B
    with pytest.raises(EvenFieldDivision):
        sm.recursive_sym_messages(_rand(FieldSpec(2), 4, 2, rng),
                                  _rand(FieldSpec(2), 4, 2, rng))
    with pytest.raises(DivisibilityViolation):
        sm.nested_messages(_rand(FieldSpec(5), 6, 2, rng),
                           _rand(FieldSpec(5), 6, 2, rng))


def test_message_counts_match_scheme_structure():
    rng = np.random.default_rng(10)
    f = FieldSpec(5)
    A, B = _rand(f, 4, 3, rng), _rand(f, 4, 3, rng)
    gen = sm.recursive_messages(A, B)
    assert len(gen.pairs) == 3 * 4 // 2  # upper triangle incl. diagonal
    sym = sm.recursive_sym_messages(A, A)
    assert len(sym.diag) == 3 and len(sym.pairs) == 3
    nst = sm.nested_messages(A, A)
    assert len(nst.diag) == 3 and len(nst.pairs) == 3
