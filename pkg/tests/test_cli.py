import csv
import json

import pytest

from stcoded.cli import COST_CSV_FIELDS, main
from stcoded.km_code import KmTrialReport
from stcoded.rate_lab import RatePoint
from stcoded.secure_codes import AuditRow


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_poly_config(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({
        "family": "StPolyDotGen", "q": 17, "m_A": 4, "m": 2,
        "N": 5, "s_r": 2, "s_c": 1, "trials": 2,
    }))
    out = tmp_path / "run.csv"
    assert main(["run", "--config", str(conf), "-o", str(out)]) == 0
    rows = _read(out)
    assert rows[0] == list(COST_CSV_FIELDS)
    assert len(rows) == 3 and rows[1][1] == "StPolyDotGen"
    assert rows[1][-1] == "1"  # success flag


def test_run_below_threshold_reports_failure_row(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({
        "family": "MatDot", "q": 17, "m_A": 4, "m": 2, "N": 5,
        "s_r": 2, "s_c": 1,
        "straggler": {"kind": "adversarial_subset", "subset": [0, 1]},
    }))
    out = tmp_path / "run.csv"
    assert main(["run", "--config", str(conf), "-o", str(out)]) == 0
    assert _read(out)[1][-1] == "0"


def test_run_bad_config_exits_2_and_cleans_partial_output(tmp_path):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"family": "MatDot", "q": 17}))  # m/N missing
    out = tmp_path / "run.csv"
    assert main(["run", "--config", str(conf), "-o", str(out)]) == 2
    assert not out.exists()
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2


def test_rates_grid(tmp_path):
    out = tmp_path / "rates.csv"
    assert main(["rates", "--scheme", "cor1", "--m", "4",
                 "--p-grid", "0.05:0.3:4", "-o", str(out)]) == 0
    rows = _read(out)
    assert rows[0] == list(RatePoint.CSV_FIELDS)
    assert len(rows) == 5
    assert main(["rates", "--scheme", "cross-dot", "--m", "4"]) == 2  # no p


def test_costs_with_gains(tmp_path, capsys):
    out = tmp_path / "costs.csv"
    assert main(["costs", "--family", "StPolyDot", "--mA", "8", "--m", "8",
                 "--sr", "2", "--sc", "2", "--N", "15", "--gains",
                 "-o", str(out)]) == 0
    rows = _read(out)
    assert rows[1][1] == "StPolyDotSym" and rows[1][2] == "12"
    assert "chi_comp_bound" in capsys.readouterr().out


def test_security_audit_pass_and_fail(tmp_path):
    out = tmp_path / "audit.csv"
    assert main(["security-audit", "--q", "5", "--N", "4", "--ell", "1",
                 "-o", str(out)]) == 0
    rows = _read(out)
    assert rows[0] == list(AuditRow.CSV_FIELDS)
    assert all(r[-1] == "True" for r in rows[1:])
    assert main(["security-audit", "--q", "5", "--N", "3", "--ell", "1",
                 "--set-size", "5"]) == 2  # set size exceeds N
    out2 = tmp_path / "audit2.csv"
    assert main(["security-audit", "--q", "3", "--N", "2", "--ell", "1",
                 "-o", str(out2)]) == 0


def test_km_sim(tmp_path):
    out = tmp_path / "km.csv"
    assert main(["km-sim", "--n", "6", "--kappas", "2,4,6", "--p", "0.1",
                 "--trials", "20", "-o", str(out)]) == 0
    rows = _read(out)
    assert rows[0] == list(KmTrialReport.CSV_FIELDS)
    assert [r[1] for r in rows[1:]] == ["2", "4", "6"]


def test_seed_env_override(monkeypatch, tmp_path):
    monkeypatch.setenv("STCODED_SEED", "123")
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    from stcoded import cli as cli_mod
    for out in (out1, out2):
        assert cli_mod.main(["km-sim", "--n", "5", "--kappas", "3",
                             "--p", "0.2", "--trials", "10",
                             "-o", str(out)]) == 0
    assert _read(out1) == _read(out2)
    assert _read(out1)[1][-1] == "123"


def test_verify_suite_passes():
    assert main(["verify"]) == 0
