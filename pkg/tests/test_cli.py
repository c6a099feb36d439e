import csv
import json
import subprocess
import sys

import pytest

from gapfield import cli
from gapfield import solver as V
from gapfield.errors import NumericalError


def write_points(path, rows, header="x1,x2,x3"):
    path.write_text(header + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- solve ------------------------------------------------------------------


def test_solve_both_routes(tmp_path):
    pts = write_points(tmp_path / "p.csv", [(0, 0.2, 0), (2.5, 0, 0), (0, -1, 1)])
    out = tmp_path / "f.csv"
    rc = cli.main(["solve", "--eps", "0.2", "--p", "0.1", "--dir", "x", "--route", "both", "--points", str(pts), "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert len(rows) == 3 and all(r["status"] == "ok" for r in rows)
    assert list(rows[0]) == cli.FIELD_HEADER
    side = json.loads((tmp_path / "f.csv.json").read_text())
    assert side["gap"]["images"] == pytest.approx(side["gap"]["bem"], rel=1e-4)
    assert side["c1"] == pytest.approx(-side["c2"])


def test_solve_empty_points(tmp_path):
    pts = write_points(tmp_path / "p.csv", [])
    out = tmp_path / "f.csv"
    assert cli.main(["solve", "--eps", "0.2", "--points", str(pts), "--out", str(out)]) == 0
    assert out.read_text() == ",".join(cli.FIELD_HEADER) + "\n"


def test_solve_flags_invalid_points(tmp_path):
    pts = write_points(tmp_path / "p.csv", [(1.1, 0, 0), (0, 0, 0.3), (0, 0.5, 0)])
    out = tmp_path / "f.csv"
    assert cli.main(["solve", "--eps", "0.2", "--p", "0.3", "--points", str(pts), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [r["status"] for r in rows] == ["inside_inclusion", "at_emitter", "ok"]
    assert rows[0]["u"] == "" and rows[0]["du3"] == ""
    # 17 significant digits
    mant = rows[2]["du2"].lower().split("e")[0].lstrip("-").replace(".", "").lstrip("0")
    assert len(mant) == 17


@pytest.mark.parametrize(
    "args",
    [
        ["solve", "--eps", "0.001", "--route", "bem"],
        ["solve", "--eps", "0.1", "0.2"],
        ["solve", "--eps", "0.1", "--p", "0.0", "--dir", "w"],
        ["solve", "--eps", "-1"],
        ["solve", "--eps", "0.1", "--tol", "2"],
    ],
)
def test_solve_usage_errors(tmp_path, args):
    pts = write_points(tmp_path / "p.csv", [(0, 0.5, 0)])
    assert cli.main(args + ["--points", str(pts), "--out", str(tmp_path / "o.csv")]) == 2


def test_solve_bad_files(tmp_path):
    bad = write_points(tmp_path / "b.csv", [(0, 1, 2)], header="a,b,c")
    out = str(tmp_path / "o.csv")
    assert cli.main(["solve", "--eps", "0.1", "--points", str(bad), "--out", out]) == 2
    assert cli.main(["solve", "--eps", "0.1", "--points", str(tmp_path / "missing.csv"), "--out", out]) == 2
    nonnum = write_points(tmp_path / "n.csv", [("a", 1, 2)])
    assert cli.main(["solve", "--eps", "0.1", "--points", str(nonnum), "--out", out]) == 2


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("singular system")

    monkeypatch.setattr(V, "solve_full", boom)
    pts = write_points(tmp_path / "p.csv", [(0, 0.5, 0)])
    assert cli.main(["solve", "--eps", "0.1", "--points", str(pts), "--out", str(tmp_path / "o.csv")]) == 3


# --- sweep / verify ---------------------------------------------------------


def test_verify_core_invariants(tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["verify", "--suite", "core-invariants", "--eps", "0.1", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] and rep["law"] == "core-invariants"
    assert rep["config"]["eps_list"] == [0.1]


def test_sweep_gap(tmp_path):
    out = tmp_path / "g.json"
    assert cli.main(["sweep", "--law", "gap", "--eps-min", "1e-5", "--eps-max", "1e-2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["band"]["max"] / rep["band"]["min"] <= 2.5
    assert len(rep["rows"]) == 13
    assert "metadata" in rep and rep["runtime_s"] > 0


def test_sweep_enhancement_slope(tmp_path):
    out = tmp_path / "e.json"
    assert cli.main(["sweep", "--law", "enhancement", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["fit"]["slope"] == pytest.approx(-2.0, abs=0.1)


def test_reproducible_reports(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert cli.main(["sweep", "--law", "gap", "--eps-min", "1e-3", "--eps-max", "1e-1", "--reproducible", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["runtime_s"] is None


def test_failed_check_exit_code(tmp_path):
    from gapfield.verify import load_constants

    text = (tmp_path / "c.ini")
    src = load_constants()
    lines = []
    for section, values in src.values.items():
        lines.append(f"[{section}]")
        for k, v in values.items():
            lines.append(f"{k} = {1.0001 if (section, k) == ('gap', 'band') else v}")
    text.write_text("\n".join(lines) + "\n")
    args = ["sweep", "--law", "gap", "--eps-min", "1e-4", "--eps-max", "1e-2", "--constants", str(text), "--out", str(tmp_path / "r.json")]
    assert cli.main(args) == 1


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "--suite", "nope"],
        ["sweep", "--law", "gap", "--eps-min", "1e-3"],
        ["sweep", "--law", "axial", "--eps", "1e-3"],
        ["sweep", "--law", "gap", "--per-decade", "0"],
        ["frobnicate"],
        [],
    ],
)
def test_report_usage_errors(args):
    assert cli.main(args) == 2


def test_out_of_scope_sweep_is_usage_error():
    assert cli.main(["sweep", "--law", "enhancement", "--eps-min", "1e-3", "--eps-max", "1e-1"]) == 2


def test_json_serialiser():
    import numpy as np

    text = cli.to_json({"a": np.float64(0.1), "b": [1, np.int64(2)], "c": float("nan"), "d": np.bool_(True), "e": {}})
    d = json.loads(text)
    assert d == {"a": 0.1, "b": [1, 2], "c": None, "d": True, "e": {}}
    assert "0.10000000000000001" in text
    with pytest.raises(TypeError):
        cli.to_json(object())


def test_console_entry_point(tmp_path):
    out = tmp_path / "u.json"
    r = subprocess.run(
        [sys.executable, "-m", "gapfield.cli", "verify", "--suite", "bem-unit", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0, r.stderr
    assert json.loads(out.read_text())["pass"]
