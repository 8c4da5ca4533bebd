import csv
import json

import numpy as np
import pytest

from isoschlesinger.cli import run, to_json


def report(out, mode):
    return json.loads((out / f"{mode}.json").read_text())


def test_pvi_solve_hitchin(tmp_path, capsys):
    assert run(["pvi-solve", "--hitchin", "1,1,3", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "pvi.csv").open()))
    assert len(rows) == 601
    res = [float(r["residual_pvi"]) for r in rows if r["residual_pvi"] != "nan"]
    assert max(res) < 1e-4
    rep = report(tmp_path, "pvi-solve")
    assert rep["passed"] and rep["version"] == "0.1.0" and len(rep["config_hash"]) == 64
    assert rep["tolerances"]["gate"] == 1e-4


def test_schlesinger_default_instance(tmp_path, capsys):
    assert run(["schlesinger-verify", "--out", str(tmp_path), "--threads", "2"]) == 0
    rep = report(tmp_path, "schlesinger-verify")
    assert len(rep["result"]["pairs"]) == 25
    assert max(rep["result"]["pairs"].values()) < 1e-3
    assert len(rep["result"]["eigenvalues"]) == 5


def test_malformed_json_names_the_problem(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"branch_points": [[0, 0], [1, 0]')
    assert run(["curve-info", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "malformed JSON" in capsys.readouterr().err
    bad.write_text('{"branch_points": "nope"}')
    assert run(["curve-info", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "branch_points" in capsys.readouterr().err


def test_missing_required_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"branch_points": [[0, 0], [1, 0], [0.4, 0.1]]}')
    assert run(["omega-eval", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "lattice_coords" in capsys.readouterr().err


def test_non_positive_tolerance(tmp_path, capsys):
    assert run(["tau", "--c1", "0.2", "--c2", "0.3", "--tol", "0", "--out", str(tmp_path)]) == 2


def test_gate_failure_and_compute_error(tmp_path, capsys):
    args = ["tau", "--c1", "0.2", "--c2", "0.3", "--x-grid", "0.3,0.4,11", "--out", str(tmp_path)]
    assert run(args + ["--tol", "1e-30"]) == 1
    assert run(["tau", "--c1", "0.5", "--c2", "0.5", "--x-grid", "0.3,0.4,11", "--out", str(tmp_path)]) == 3


def test_outputs_are_deterministic(tmp_path, capsys):
    cfg = tmp_path / "g1.json"
    cfg.write_text(json.dumps({"branch_points": [[0, 0], [1, 0], [0.4, 0.1]],
                               "lattice_coords": {"c1": [[0.2, 0.05]], "c2": [0.15]}}))
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run(["omega-eval", "--config", str(cfg), "--out", str(out), "--seed", "4"]) == 0
        blobs.append((out / "omega-eval.json").read_bytes())
    assert blobs[0] == blobs[1]
    for k in range(2):
        out = tmp_path / f"tau{k}"
        run(["tau", "--c1", "0.2", "--c2", "0.3", "--x-grid", "0.3,0.4,11", "--out", str(out)])
    assert (tmp_path / "tau0" / "tau.csv").read_bytes() == (tmp_path / "tau1" / "tau.csv").read_bytes()


def test_config_hash_tracks_inputs(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(["tau", "--c1", "0.2", "--c2", "0.3", "--x-grid", "0.3,0.4,11", "--out", str(a)])
    run(["tau", "--c1", "0.2", "--c2", "0.31", "--x-grid", "0.3,0.4,11", "--out", str(b)])
    assert report(a, "tau")["config_hash"] != report(b, "tau")["config_hash"]


def test_billiard_commands(tmp_path, capsys):
    cfg = tmp_path / "tri.json"
    cfg.write_text(json.dumps({"axes": [4, 2], "betas": [0], "signature": [1],
                               "caustics": [1.856406460550999], "start": {"jacobi": [3.0]}, "rounds": 50}))
    assert run(["billiard-run", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "trajectory.csv").open()))
    assert rows[0][:2] == ["bounce", "quadric"] and len(rows) == 52
    assert run(["poncelet-check", "--config", str(cfg), "--n", "6", "--out", str(tmp_path)]) == 0
    rep = report(tmp_path, "poncelet-check")["result"]
    assert rep["verdict"] and rep["first_closing_round"] == 3
    cfg.write_text(json.dumps({"axes": [4, 2], "betas": [0], "signature": [1]}))
    assert run(["billiard-run", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_figures_flag_writes_png(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    assert run(["tau", "--c1", "0.2", "--c2", "0.3", "--x-grid", "0.3,0.4,11", "--out", str(tmp_path),
                "--figures"]) == 0
    assert (tmp_path / "tau.png").stat().st_size > 0


def test_json_writer_formatting():
    text = to_json({"b": 0.1, "a": [1 + 2j, np.float64(1 / 3)], "c": None})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "[1, 2]" in text and "0.33333333333333331" in text
