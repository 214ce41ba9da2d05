import csv
import io
import json

import pytest

from carnot.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    body = "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_degree_json(capsys):
    code, out, _ = run_cli(capsys, "degree", "--example", "h1_plane_degree")
    assert code == 0
    payload = json.loads(out)
    assert payload["degree"]["degree"] == 2
    assert payload["provenance"]["seed"] == 0 and len(payload["provenance"]["config_sha256"]) == 64


def test_degree_point_override(capsys):
    code, out, _ = run_cli(capsys, "degree", "--example", "h1_plane_degree", "--point", "1,0,0")
    assert code == 0 and json.loads(out)["degree"]["degree"] == 3


def test_blowup_json(capsys):
    code, out, _ = run_cli(capsys, "blowup", "--example", "heisheis_blowup")
    assert code == 0
    var = json.loads(out)["variety"]
    assert var["defining_polynomial"] == ["x3", "x5 - x1^2 - x2^2", "x6 - x1^2"]


def test_scaling_csv_columns(capsys):
    code, out, _ = run_cli(capsys, "scaling", "--example", "h1_plane_scaling", "--samples", "20000")
    assert code == 0
    assert out.startswith("# ")
    rows = csv_rows(out)
    assert list(rows[0]) == ["r", "measure", "std_error", "ratio", "degree", "slope", "r2"]
    assert len(rows) == 5 and rows[0]["degree"] == "2"


def test_calibrate(capsys):
    code, out, _ = run_cli(capsys, "calibrate", "--example", "h1_calibrate")
    assert code == 0
    cal = json.loads(out)["calibration"]
    assert 0 < cal["epsilon"] < 1 and cal["seed"] == 0


def test_malformed_polynomial_reports_location(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("group: h1\npolynomials:\n  - \"x3 - x1^^2\"\npoint: [0, 0, 0]\n")
    code, _, err = run_cli(capsys, "degree", "--config", str(cfg))
    assert code == 2
    assert "bad.yaml:3:" in err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("submanifold: h1_plane\npoint: [0, 0, 0]\nsamlpes: 10\n")
    code, _, err = run_cli(capsys, "degree", "--config", str(cfg))
    assert code == 2 and "samlpes" in err


def test_off_manifold_point_is_invalid_input(capsys):
    code, _, err = run_cli(capsys, "degree", "--example", "h1_plane_degree", "--point", "0,0,1")
    assert code == 2 and err


def test_missing_config_file(capsys):
    code, _, _ = run_cli(capsys, "degree", "--config", "/nonexistent/x.yaml")
    assert code == 2


def test_yaml_config_roundtrip(tmp_path, capsys):
    cfg = tmp_path / "inline.yaml"
    cfg.write_text("group:\n  m1: 2\n  m2: 1\n  brackets:\n    - [1, 2, 3, 2]\n"
                   "submanifold: [\"x3\"]\npoint: [0, 0, 0]\n")
    code, out, err = run_cli(capsys, "degree", "--config", str(cfg))
    assert code == 0, err
    assert json.loads(out)["degree"]["degree"] == 2


@pytest.mark.slow
def test_converge_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        assert main(["converge", "--example", "heisheis_converge", "--samples", "2000", "-o", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert main(["converge", "--example", "heisheis_converge", "--samples", "2000", "--threads", "3",
                 "-o", str(tmp_path / "t.csv")]) == 0
    assert (tmp_path / "t.csv").read_bytes() == outs[0]
