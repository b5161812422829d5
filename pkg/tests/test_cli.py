import json
import subprocess
import sys

import pytest

from holoqc import cli
from holoqc.report import read_report


def write(tmp_path, obj, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


def test_gate_csv_is_deterministic(tmp_path):
    sc = write(tmp_path, {"mode": "gate", "gate_kind": "Ry", "angle": 0.5, "n_steps": 400})
    outs = []
    for i in range(2):
        out = tmp_path / f"g{i}.csv"
        assert cli.main(["gate", "--scenario", str(sc), "--out", str(out), "--seed", str(i)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    head, rows = read_report(tmp_path / "g0.csv")
    assert head["mode"] == "gate" and len(rows) == 4
    assert max(r["discrepancy"] for r in rows) < 1e-5


def test_transfer_and_tol_override(tmp_path):
    sc = write(tmp_path, {"mode": "transfer", "scheme": "optical", "params": {"T": 3000.0}})
    out = tmp_path / "t.csv"
    assert cli.main(["transfer", "--scenario", str(sc), "--out", str(out), "--tol", "1e-8"]) == 0
    head, rows = read_report(out)
    assert head["tol"] == "1e-08"
    assert rows[0]["fidelity"] > 0.9


def test_sweep_grid(tmp_path):
    sc = write(tmp_path, {"mode": "sweep", "schemes": ["optical"], "gammas": [0.0, 0.01], "kappas": [0.0],
                          "params": {"T": 3000.0}})
    out = tmp_path / "s.csv"
    assert cli.main(["sweep", "--scenario", str(sc), "--out", str(out)]) == 0
    _, rows = read_report(out)
    assert [r["gamma"] for r in rows] == [0.0, 0.01]
    assert rows[0]["fidelity"] > rows[1]["fidelity"]


def test_mode_mismatch_and_bad_input(tmp_path, capsys):
    sc = write(tmp_path, {"mode": "sweep"})
    assert cli.main(["gate", "--scenario", str(sc)]) == 2
    assert "not 'gate'" in capsys.readouterr().err
    assert cli.main(["transfer", "--scenario", str(write(tmp_path, {"scheme": "laser"}, "b.json"))]) == 2
    assert cli.main(["gate", "--tol", "-1"]) == 2
    assert cli.main(["sweep", "--workers", "0"]) == 2
    with pytest.raises(SystemExit):
        cli.main(["teleport"])


def test_check_exit_code(tmp_path):
    out = tmp_path / "c.csv"
    assert cli.main(["check", "--out", str(out)]) == 0
    _, rows = read_report(out)
    assert all(r["passed"] for r in rows)


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "holoqc.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("holoqc ")
