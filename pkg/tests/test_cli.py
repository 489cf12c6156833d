import json
import math

import pytest

from capvertex.cli import main, run, verify_suite
from capvertex.errors import DomainError


def _write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def test_classify_scenario_writes_csv_and_report(tmp_path):
    cfg = _write_config(tmp_path, "c.json",
                        {"kind": "classify", "alpha": math.pi / 4, "grid": 21})
    out = tmp_path / "out"
    rc = main(["classify", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    lines = (out / "classification.csv").read_text().strip().splitlines()
    assert lines[0] == "gamma1,gamma2,class,numerator"
    assert len(lines) == 1 + 21 * 21
    report = json.loads((out / "report.json").read_text())
    assert report["scenario"] == "classify"
    assert report["grid"] == 21


def test_classify_repeat_runs_are_byte_identical(tmp_path):
    cfg = _write_config(tmp_path, "c.json",
                        {"kind": "classify", "alpha": math.pi / 3, "grid": 15})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(cfg, out1, seed=42) == 0
    assert run(cfg, out2, seed=42) == 0
    assert (out1 / "classification.csv").read_bytes() == \
        (out2 / "classification.csv").read_bytes()
    assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()


def test_cap_scenario_emits_mesh_and_geometry(tmp_path):
    cfg = _write_config(tmp_path, "cap.json", {
        "kind": "cap", "support": "wedge", "alpha": math.pi / 4,
        "gammas": [2 * math.pi / 3, 2 * math.pi / 3], "h": 1.0,
        "refinement": 1,
    })
    out = tmp_path / "out"
    assert run(cfg, out) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["kind"] == "spherical"
    assert report["radius"] == pytest.approx(1.0)
    assert (out / "cap.obj").exists()


def test_solve_graph_scenario_reports_sphere_fit(tmp_path):
    cfg = _write_config(tmp_path, "g.json", {
        "kind": "solve-graph", "a": 1.0, "b": 1.0,
        "gammas": [math.pi / 3] * 4, "grid_n": 16,
    })
    out = tmp_path / "out"
    assert run(cfg, out) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["sphere_fit_relative_rms"] < 1e-2
    header = (out / "field.csv").read_text().splitlines()[0]
    assert header == "x,y,u"


def test_evolve_scenario_small_octant(tmp_path):
    cfg = _write_config(tmp_path, "e.json", {
        "kind": "evolve", "support": "orthant",
        "gammas": [math.pi / 2] * 3, "refinement": 1,
        "perturbation": 0.005, "max_iters": 300,
    })
    out = tmp_path / "out"
    assert run(cfg, out, seed=3) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["volume_error"] < 1e-8
    assert report["diagnostics"]["sphere_relative_rms"] < 1e-2
    assert (out / "evolved.obj").exists()


def test_malformed_json_exits_2_without_artifacts(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"kind": "classify",')
    out = tmp_path / "out"
    assert run(cfg, out) == 2
    assert not out.exists()


def test_missing_required_key_exits_2(tmp_path, capsys):
    cfg = _write_config(tmp_path, "bad.json", {"kind": "cap", "support": "wedge"})
    out = tmp_path / "out"
    assert run(cfg, out) == 2
    assert "alpha" in capsys.readouterr().err
    assert not out.exists()


def test_kind_subcommand_mismatch_exits_2(tmp_path):
    cfg = _write_config(tmp_path, "c.json",
                        {"kind": "classify", "alpha": math.pi / 4, "grid": 5})
    assert main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_unknown_suite_raises():
    with pytest.raises(DomainError):
        verify_suite("no-such-suite")


def test_verify_wente_suite_passes(tmp_path, capsys):
    cfg = _write_config(tmp_path, "v.json", {"kind": "verify", "suite": "wente"})
    rc = main(["verify", "--config", str(cfg), "--out", str(tmp_path / "o")])
    captured = capsys.readouterr().out
    assert rc == 0
    assert "[PASS]" in captured
    assert "[FAIL]" not in captured
