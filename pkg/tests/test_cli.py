import csv
import json

import pytest

from ccz_distill.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_print_config(capsys):
    code, out = run(capsys, "simulate", "--print-config", "--shots", "123", "--p", "0.001,0.002")
    assert code == 0
    assert "shots = 123" in out and "p = 0.001,0.002" in out


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nshots = 77\nseed = 9\n")
    _, out = run(capsys, "simulate", "--config", str(cfg), "--seed", "4", "--print-config")
    assert "shots = 77" in out and "seed = 4" in out


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nonsense = 1\n")
    assert main(["simulate", "--config", str(cfg), "--print-config"]) == 2


def test_simulate_p_zero(tmp_path, capsys):
    out_dir = tmp_path / "new" / "dir"
    code, _ = run(capsys, "simulate", "--p", "0", "--shots", "2000", "--out-dir", str(out_dir))
    assert code == 0
    with open(out_dir / "simulate.csv") as f:
        (row,) = list(csv.DictReader(f))
    assert row["accepted"] == "2000" and row["fails"] == "0"
    assert float(row["p_accept"]) == 1.0
    meta = json.loads((out_dir / "simulate.json").read_text())
    assert meta["config"]["shots"] == 2000


def test_simulate_reproducible(tmp_path, capsys):
    args = ["simulate", "--p", "0.001,0.0005", "--shots", "40000", "--seed", "5"]
    run(capsys, *args, "--out-dir", str(tmp_path / "a"), "--threads", "1")
    run(capsys, *args, "--out-dir", str(tmp_path / "b"), "--threads", "4")
    for name in ("simulate.csv", "simulate.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_emit_and_validate(tmp_path, capsys):
    path = tmp_path / "c.txt"
    assert main(["emit-circuit", "-o", str(path)]) == 0
    code, out = run(capsys, "validate", str(path))
    assert code == 0 and out.strip().endswith("PASS")
    assert "distillation_qubits=29" in out and "connectivity_violations=0" in out
    noisy = tmp_path / "n.txt"
    assert main(["emit-circuit", "-o", str(noisy), "--noisy", "0.001"]) == 0
    assert main(["validate", str(noisy)]) == 0


def test_validate_rejects_diagonal_cnot(tmp_path, capsys):
    path = tmp_path / "c.txt"
    main(["emit-circuit", "-o", str(path)])
    # Qubits 0 at (2, 3) and 3 at (3, 4) are diagonal neighbours only.
    path.write_text(path.read_text() + "TICK\nCNOT 0 3\n")
    code, out = run(capsys, "validate", str(path))
    assert code == 1 and "FAIL connectivity" in out


def test_validate_rejects_garbage(tmp_path, capsys):
    path = tmp_path / "c.txt"
    path.write_text("FROB 1 2\n")
    assert main(["validate", str(path)]) == 1


def test_enumerate(tmp_path, capsys):
    code, out = run(capsys, "enumerate-faults", "--order", "1", "--p", "0.001", "--out-dir", str(tmp_path))
    assert code == 0 and "0 malignant" in out
    rep = json.loads((tmp_path / "enumerate_order1.json").read_text())["reports"][0]
    assert rep["accepted_fail"] == 0
    assert main(["enumerate-faults", "--order", "3", "--out-dir", str(tmp_path)]) == 2


def test_fit_and_overhead(tmp_path, capsys):
    args = ["--p", "0.001,0.002,0.004", "--shots", "60000", "--out-dir", str(tmp_path)]
    run(capsys, "simulate", *args)
    code, out = run(capsys, "fit", str(tmp_path / "simulate.csv"), "--out-dir", str(tmp_path))
    assert code == 0 and "p_L =" in out
    fit = json.loads((tmp_path / "fit.json").read_text())["fit"]
    assert 1.0 < fit["b"] < 3.0
    code, out = run(capsys, "compare-overhead", "--tallies", str(tmp_path / "simulate.csv"),
                    "--out-dir", str(tmp_path))
    assert code == 0 and "SEVEN_T" in out
    res = json.loads((tmp_path / "overhead.json").read_text())
    assert res["zero_success_source"].startswith("tally")
    with open(tmp_path / "overhead.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4 * 32
