import numpy as np
import pytest

from stcoded import km_code as km
from stcoded.errors import LengthMismatch, OutOfRange, ScaleExceeded
from stcoded.rate_lab import SourceModel


def test_encode_is_linear():
    rng = np.random.default_rng(0)
    pm = km.ParityMatrix.random(8, 5, 3, rng)
    x = rng.integers(0, 3, size=8)
    y = rng.integers(0, 3, size=8)
    lhs = km.km_encode(pm, (x + y) % 3)
    rhs = (km.km_encode(pm, x) + km.km_encode(pm, y)) % 3
    assert np.array_equal(lhs, rhs)
    with pytest.raises(LengthMismatch):
        km.km_encode(pm, x[:4])


def test_prefix_nesting():
    rng = np.random.default_rng(1)
    pm = km.ParityMatrix.random(6, 6, 2, rng)
    sub = pm.prefix(3)
    assert np.array_equal(sub.C, pm.C[:3])
    with pytest.raises(OutOfRange):
        pm.prefix(7)
    with pytest.raises(OutOfRange):
        km.ParityMatrix.random(4, 5, 2, rng)


def test_ml_decode_matches_bruteforce_oracle():
    # independent oracle: exhaustive argmax over all coset members
    rng = np.random.default_rng(2)
    p = 0.1
    n = 6
    pmf = np.array([1 - p, p])
    words = np.array([[int(b) for b in format(i, f"0{n}b")]
                      for i in range(2 ** n)])
    for _ in range(20):
        pm = km.ParityMatrix.random(n, 3, 2, rng)
        z = (rng.random(n) < p).astype(np.int64)
        s = km.km_encode(pm, z)
        got = km.km_decode_ml(pm, s, pmf)
        in_coset = np.all((words @ pm.C.T) % 2 == s[None, :], axis=1)
        cands = words[in_coset]
        weights = cands.sum(axis=1)
        best = cands[int(np.argmin(weights))]  # p<1/2: min weight wins
        assert np.array_equal(got, best)
        assert np.array_equal(km.km_encode(pm, got), s)


def test_decode_rejects_oversized_spaces():
    with pytest.raises(ScaleExceeded):
        km.km_decode_ml(km.ParityMatrix(2, np.zeros((1, 30), dtype=int)),
                        [0], [0.9, 0.1])


def test_simulate_monotone_and_exact_endpoints():
    reports = km.km_simulate(8, [2, 5, 8], 0.1, 60, seed=3)
    errs = {r.kappa: r.empirical_error for r in reports}
    assert errs[8] <= errs[5] <= errs[2]
    zero_p = km.km_simulate(8, [3], 0.0, 40, seed=4)[0]
    assert zero_p.empirical_error == 0.0
    with pytest.raises(OutOfRange):
        km.km_simulate(4, [2], 0.1, 5, seed=0, q=3)


def test_trial_report_row():
    r = km.km_simulate(6, [4], 0.2, 10, seed=5)[0]
    row = r.as_row()
    assert len(row) == len(km.KmTrialReport.CSV_FIELDS)
    assert row[0] == 6 and row[1] == 4


def test_pipeline_dot_smoke():
    model = SourceModel.asym_cross_dsbs(2, 0.05)
    rep = km.km_pipeline_dot(model, n=6, kappa=6, trials=8, seed=6)
    assert rep["block_error"] == 0.0  # full-rank syndrome: lossless
    rep2 = km.km_pipeline_dot(model, n=6, kappa=2, trials=8, seed=6)
    assert 0.0 <= rep2["block_error"] <= 1.0
    with pytest.raises(OutOfRange):
        km.km_pipeline_dot(SourceModel.uniform(3, 2, 1), 4, 2, 2, 0)
