import json
from pathlib import Path

import pytest

from fedosov.cli import main

FLAT = str(Path(__file__).resolve().parent.parent / "geometries" / "flat.json")
CURVED = str(Path(__file__).resolve().parent.parent / "geometries" / "constant_curvature.json")


def run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_star_flat_wedge(capsys):
    code, out, _ = run(capsys, ["star", "--geometry", FLAT, "--p", "1 dx1", "--q", "1 dx2"])
    assert code == 0
    assert out.splitlines()[0] == "dx1^dx2"


def test_star_clifford_square(capsys):
    code, out, _ = run(capsys, ["star", "--geometry", FLAT, "--p", "1 dx1", "--q", "1 dx1"])
    assert code == 0
    assert out.splitlines()[0] == "-h^-1"


def test_star_json_shape(capsys):
    args = ["star", "--geometry", FLAT, "--p", "x1 dx1", "--q", "xi1", "--format", "json"]
    code, out, _ = run(capsys, args)
    assert code == 0
    assert out.endswith("\n")
    doc = json.loads(out)
    assert set(doc) == {"command", "inputs", "validity_order", "terms", "report"}
    assert doc["command"] == "star"
    assert doc["validity_order"] is None  # exact on the flat preset
    assert all(set(r) == {"name", "status", "detail"} for r in doc["report"])


def test_output_is_deterministic(capsys):
    args = ["star", "--geometry", CURVED, "--order", "2", "--p", "xi1 dx1",
            "--q", "x2", "--format", "json"]
    code1, out1, _ = run(capsys, args)
    code2, out2, _ = run(capsys, args)
    assert code1 == code2 == 0
    assert out1 == out2


def test_r_command(capsys):
    code, out, _ = run(capsys, ["r", "--geometry", CURVED, "--order", "2"])
    assert code == 0
    assert "r[1] = " in out
    assert "jet windows:" in out


def test_extend_command(capsys):
    code, out, _ = run(capsys, ["extend", "--geometry", FLAT, "--order", "2",
                                "--form", "x1 xi1"])
    assert code == 0
    assert "degree 0:" in out


def test_verify_flat(capsys):
    code, out, _ = run(capsys, ["verify", "--geometry", FLAT, "--order", "2"])
    assert code == 0
    assert "result: all invariants hold" in out
    assert "[fail]" not in out


def test_print_infers_dimension(capsys):
    code, out, _ = run(capsys, ["print", "--form", "x2 xi3 dx1"])
    assert code == 0
    assert out == "x2*xi3 dx1\n"


def test_print_respects_jet_flag(capsys):
    code, out, _ = run(capsys, ["print", "--form", "x1^5", "--jet", "6"])
    assert code == 0
    assert out == "x1^5\n"
    code, out, _ = run(capsys, ["print", "--form", "x1^5", "--jet", "4"])
    assert code == 0
    assert out == "0\n"


def test_parse_error_exit_code(capsys):
    code, _, err = run(capsys, ["print", "--form", "x1 +"])
    assert code == 2
    assert "position 4" in err


def test_missing_geometry_exit_code(capsys):
    code, _, err = run(capsys, ["r"])
    assert code == 2
    assert "--geometry" in err


def test_jet_conflict_exit_code(capsys):
    code, _, err = run(capsys, ["star", "--geometry", FLAT, "--jet", "3",
                                "--p", "x1", "--q", "x2"])
    assert code == 2
    assert "conflicts" in err


def test_malformed_geometry_diagnostic(tmp_path, capsys):
    bad = tmp_path / "geom.json"
    bad.write_text('{"n": 2, "J": 4, "preset": "wavy"}')
    code, _, err = run(capsys, ["verify", "--geometry", str(bad)])
    assert code == 2
    assert "preset" in err


def test_missing_file_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, ["r", "--geometry", str(tmp_path / "nope.json")])
    assert code == 2
    assert "nope.json" in err
