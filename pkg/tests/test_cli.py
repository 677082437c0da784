import csv
import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from holzyg.cli import main, parse_rows
from holzyg.gramian_frame import save_frame
from holzyg.schemes import Scheme


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def files(tmp_path_factory, frame_dd6, frame_dd4):
    d = tmp_path_factory.mktemp("cli")
    assert main(["scheme", "build", "--family", "bspline", "--degree", "2", "--hl", "1", "--hr", "2",
                 "--out", str(d / "b2.json")]) == 0
    assert main(["scheme", "build", "--family", "dd", "--L", "2", "--hl", "1", "--hr", "2",
                 "--out", str(d / "dd4.json")]) == 0
    save_frame(frame_dd6, d / "dd6f.json")
    save_frame(frame_dd4, d / "dd4f.json")
    return d


def test_parse_rows():
    assert parse_rows("-2..2") == [-2, -1, 0, 1, 2]
    assert parse_rows("3,-1") == [3, -1]


def test_scheme_build_dd_matches_golden(files):
    s = Scheme.load(files / "dd4.json")
    assert [s.Z.entry(-1, k) for k in range(-2, 2)] == [Fraction(-5, 64), Fraction(5, 8), Fraction(15, 32),
                                                          Fraction(-1, 64)]


def test_scheme_build_regular_bspline(tmp_path, capsys):
    code, _, _ = run(capsys, "scheme", "build", "--family", "bspline", "--degree", "2", "--hl", "1", "--hr", "1",
                     "--out", str(tmp_path / "s.json"))
    assert code == 0
    Z = Scheme.load(tmp_path / "s.json").Z
    assert all(Z.column_mask(k).values == (Fraction(1, 4), Fraction(3, 4), Fraction(3, 4), Fraction(1, 4))
               for k in range(-5, 6))


def test_scheme_build_rbf(tmp_path, capsys):
    code, _, _ = run(capsys, "scheme", "build", "--family", "rbf", "--kernel", "polyharmonic", "--L", "2", "--m", "3",
                     "--hl", "1", "--hr", "2", "--out", str(tmp_path / "p.json"))
    assert code == 0
    Z = Scheme.load(tmp_path / "p.json").Z
    assert Z.entry(-1, -2) == Fraction(-1, 24)


@pytest.mark.parametrize("argv", [
    ["scheme", "build", "--family", "dd", "--degree", "2"],
    ["scheme", "build", "--family", "rbf", "--L", "2", "--m", "1"],
    ["scheme", "build", "--family", "rbf", "--kernel", "polyharmonic", "--L", "2", "--m", "5"],
    ["scheme", "build", "--family", "dd", "--L", "2", "--hl", "-1"],
    ["scheme", "build", "--family", "nope"],
    ["frame", "build", "--L", "1"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_scheme_check(files, tmp_path, capsys):
    code, out, _ = run(capsys, "scheme", "check", str(files / "b2.json"))
    assert code == 0 and json.loads(out)["ok"]
    obj = json.loads((files / "dd4.json").read_text())
    obj["Z"]["right_mask"]["values"][0] = "-1/10"
    (tmp_path / "bad.json").write_text(json.dumps(obj))
    code, out, err = run(capsys, "scheme", "check", str(tmp_path / "bad.json"))
    assert code == 3
    assert json.loads(out)["row_sum_residual"] > 0
    assert json.loads(err)["exit_code"] == 3


def test_frame_build_and_verify(tmp_path, capsys):
    f = tmp_path / "f.json"
    assert run(capsys, "frame", "build", "--family", "dd", "--L", "2", "--hl", "1", "--hr", "2",
               "--out", str(f))[0] == 0
    code, out, _ = run(capsys, "frame", "verify", str(f), "--levels", "8")
    rep = json.loads(out)
    assert code == 0 and rep["ok"] and rep["uep_residual"] <= 1e-9
    g = tmp_path / "g.json"
    assert run(capsys, "frame", "build", "--L", "2", "--hl", "1", "--hr", "2", "--import", str(f),
               "--out", str(g))[0] == 0
    assert g.read_text() == f.read_text()


def test_frame_import_from_data_dir(files, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HOLZYG_DATA", str(files))
    monkeypatch.chdir(tmp_path)
    assert run(capsys, "frame", "build", "--L", "2", "--hl", "1", "--hr", "2", "--import", "dd4f.json",
               "--out", "x.json")[0] == 0
    code, _, err = run(capsys, "frame", "build", "--L", "3", "--hl", "1", "--hr", "2", "--import", "dd4f.json")
    assert code == 2


def test_frame_verify_tampered(files, tmp_path, capsys):
    obj = json.loads((files / "dd4f.json").read_text())
    key = next(iter(obj["Q"]["middle"]))
    obj["Q"]["middle"][key]["values"][0] += 0.05
    (tmp_path / "t.json").write_text(json.dumps(obj))
    code, _, err = run(capsys, "frame", "verify", str(tmp_path / "t.json"))
    assert code == 3 and json.loads(err)["error"] == "FrameError"


def test_analyze(files, tmp_path, capsys):
    out = tmp_path / "a"
    code, stdout, _ = run(capsys, "analyze", "--scheme", str(files / "b2.json"), "--frame", str(files / "dd6f.json"),
                          "--rows", "-2..-1", "--levels", "5", "--out", str(out))
    assert code == 0
    rows = list(csv.reader(open(out / "r_star_n_4dp.csv")))
    assert rows[5][1:] == ["2.0000", "2.0000"]
    rep = json.loads((out / "report.json").read_text())
    assert [f["function"] for f in rep["functions"]] == [-2, -1]
    full = list(csv.reader(open(out / "r_star_n.csv")))
    assert float(full[5][1]) == rep["functions"][0]["r_star_n"][4]
    out2 = tmp_path / "b"
    run(capsys, "analyze", "--scheme", str(files / "b2.json"), "--frame", str(files / "dd6f.json"),
        "--rows", "-2..-1", "--levels", "5", "--out", str(out2))
    for name in ("report.json", "r_n.csv", "r_star_n.csv", "gamma.csv", "r_n_4dp.csv"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes()


def test_analyze_levels_zero(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", "--scheme", "missing.json", "--frame", "missing.json", "--rows", "0..1",
                       "--levels", "0", "--out", str(tmp_path / "x"))
    assert code == 2 and "levels" in json.loads(err)["message"]
    assert not (tmp_path / "x").exists()


def test_limits_eval(files, tmp_path, capsys):
    f = tmp_path / "l.csv"
    assert run(capsys, "limits", "eval", "--scheme", str(files / "dd4.json"), "--rows", "-2..2", "--level", "3",
               "--out", str(f))[0] == 0
    rows = list(csv.reader(open(f)))
    head, body = rows[0], np.array(rows[1:], dtype=float)
    assert head == ["m", "x", "zeta_-2", "zeta_-1", "zeta_0", "zeta_1", "zeta_2"]
    knots = body[body[:, 0] % 8 == 0]
    for row in knots:
        k = int(row[0]) // 8
        assert list(row[2:]) == [1.0 if k == i else 0.0 for i in range(-2, 3)]
    f0 = tmp_path / "l0.csv"
    run(capsys, "limits", "eval", "--scheme", str(files / "dd4.json"), "--rows", "0", "--level", "0", "--out", str(f0))
    assert list(csv.reader(open(f0)))[1:] == [["0", "0.0", "1.0"]]


def test_limits_partition_of_unity(files, tmp_path, capsys):
    f = tmp_path / "p.csv"
    run(capsys, "limits", "eval", "--scheme", str(files / "b2.json"), "--rows", "-12..12", "--level", "4",
        "--out", str(f))
    body = np.array(list(csv.reader(open(f)))[1:], dtype=float)
    mid = body[np.abs(body[:, 1]) <= 4]
    assert np.max(np.abs(mid[:, 2:].sum(axis=1) - 1)) <= 1e-12


def test_config_overrides(files, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"L": 1}))
    code, _, _ = run(capsys, "--config", str(cfg), "scheme", "build", "--family", "dd", "--L", "2",
                     "--out", str(tmp_path / "s.json"))
    assert code == 0 and Scheme.load(tmp_path / "s.json").params == {"L": 1}
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "--config", str(cfg), "scheme", "build", "--family", "dd", "--L", "2")[0] == 2


def test_console_script(files):
    proc = subprocess.run([sys.executable, "-m", "holzyg.cli", "scheme", "check", str(files / "dd4.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["ok"]
