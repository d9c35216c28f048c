import csv
import json
import math
import subprocess
import sys

import pytest

from thermoscope.cli import SCHEMA, fmt, main


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    return meta, list(csv.DictReader(lines[1:]))


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(math.inf) == "inf" and fmt(-math.inf) == "-inf" and fmt(math.nan) == "nan"
    assert fmt(2.0) == "2"


def test_marked_csv(tmp_path):
    out = tmp_path / "xs.csv"
    assert main(["marked", "--alpha", "1", "--n", "10000", "--out", str(out)]) == 0
    meta, rows = read_csv(out)
    assert meta["schema"] == SCHEMA and meta["config"]["n"] == 10000
    assert list(rows[0]) == ["n", "x_n", "n_x_n_alpha"]
    assert len(rows) == 10000
    assert abs(float(rows[-1]["n_x_n_alpha"]) - 1.0) <= 0.01
    assert len(rows[5]["x_n"].replace(".", "").lstrip("0")) <= 12


def test_marked_json(capsys):
    code, out, _ = run(["marked", "--n", "5", "--format", "json"], capsys)
    d = json.loads(out)
    assert code == 0 and d["schema"] == SCHEMA
    assert [r[0] for r in d["result"]["rows"]] == [1, 2, 3, 4, 5]


def test_pressure_zero(capsys):
    code, out, _ = run(["pressure", "--alpha", "1", "--potential", "zero", "--depth", "12"], capsys)
    d = json.loads(out)
    assert code == 0
    b = d["result"]["bracket"]
    assert b["lo"] <= math.log(2) + 1e-11 and b["hi"] >= math.log(2) - 1e-11
    assert d["config"]["depth"] == 12 and d["config"]["potential"] == "zero"


def test_pressure_methods(capsys):
    code, out, _ = run(["pressure", "--potential", "omega(1)", "--method", "tree", "--depth", "8",
                        "--y", "0.5"], capsys)
    assert code == 0 and json.loads(out)["result"]["bracket"]["method"] == "tree"
    code, out, _ = run(["pressure", "--potential", "zero", "--method", "bowen"], capsys)
    b = json.loads(out)["result"]["bracket"]
    assert code == 0 and b["lo"] - 1e-11 <= math.log(2) <= b["hi"] + 1e-11


def test_scan_geometric(tmp_path):
    out = tmp_path / "scan.json"
    code = main(["scan", "--alpha", "1", "--potential", "geometric", "--beta", "0.6:2:60",
                 "--out", str(out)])
    d = json.loads(out.read_text())
    assert code == 0 and d["result"]["verdict"] == "TransitionLocated"
    lo, hi = d["result"]["beta_star"]
    assert 0.9 <= lo <= hi <= 1.1
    assert d["config"]["beta"] == [0.6, 2.0, 60]


def test_scan_no_sign_change_exit_code(capsys):
    code, out, _ = run(["scan", "--potential", "geometric", "--beta", "0.2:0.6:3"], capsys)
    assert code == 2 and json.loads(out)["result"]["verdict"] == "NoSignChangeInRange"


def test_induced(capsys):
    code, out, _ = run(["induced", "--potential", "omega(2)", "--p", "0", "--n-max", "300"], capsys)
    d = json.loads(out)
    assert code == 0 and d["result"]["divergent"] is True
    assert d["result"]["bracket"]["lo"] == "inf"
    assert d["result"]["witness"]["reason"] == "terms bounded below"


def test_certify_hat_and_sidecar(tmp_path):
    out, side = tmp_path / "c.json", tmp_path / "t.json"
    code = main(["certify", "--potential", "hat", "--out", str(out), "--timings", str(side)])
    d = json.loads(out.read_text())
    assert code == 0 and d["result"]["verdict"] == "CertifiedNoTransition"
    assert "timings" not in d["result"]
    assert "total" in json.loads(side.read_text())


def test_certify_undetermined_exit_code(capsys):
    code, out, _ = run(["certify", "--potential", "tilde(1)", "--beta-max", "8"], capsys)
    assert code == 2 and json.loads(out)["result"]["verdict"] == "Undetermined"


def test_orbits_csv(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["orbits", "--potential", "hat", "--period", "4", "--out", str(out)]) == 0
    _, rows = read_csv(out)
    assert rows[0] == {"return_word": "1", "period": "1", "point": "1", "average": "0"}
    assert len(rows) == 7


def test_potential_file(tmp_path, capsys):
    spec = tmp_path / "pot.json"
    spec.write_text(json.dumps({"name": "lin", "gamma": 1.0, "phi0": 0.0, "c": -1.0, "h": "0"}))
    code, out, _ = run(["pressure", "--potential", str(spec), "--depth", "10"], capsys)
    ref_code, ref, _ = run(["pressure", "--potential", "omega(1)", "--depth", "10"], capsys)
    assert code == ref_code == 0
    assert json.loads(out)["result"]["bracket"]["lo"] == json.loads(ref)["result"]["bracket"]["lo"]
    spec.write_text(json.dumps({"gamma": 1.0, "phi0": 0.0, "c": -1.0, "h": "0", "alpha": 2.0}))
    code, _, err = run(["pressure", "--potential", str(spec)], capsys)
    assert code == 1 and "alpha" in err


def test_missing_file_reported_verbatim(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    code, _, err = run(["pressure", "--potential", str(missing)], capsys)
    assert code == 1
    try:
        open(missing)
    except OSError as exc:
        assert err.strip() == str(exc)


def test_bad_json_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(["pressure", "--potential", str(bad)], capsys)
    assert code == 1 and str(bad) in err


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate"],
    ["marked", "--n", "0"],
    ["marked", "--n", "ten"],
    ["marked", "--alpha", "-1"],
    ["pressure", "--depth", "30"],
    ["pressure", "--y", "1.5", "--method", "tree"],
    ["pressure", "--bogus"],
    ["scan", "--beta", "2:1:5"],
    ["scan", "--beta", "1:2:20000"],
    ["induced"],
    ["induced", "--p", "nan"],
    ["orbits", "--region-floor", "2"],
    ["marked", "--format", "xml"],
])
def test_usage_errors(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 64
    assert err


def test_domain_error_exit_code(capsys):
    code, _, err = run(["pressure", "--potential", "omega"], capsys)
    assert code == 1 and "gamma" in err


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run([sys.executable, "-m", "thermoscope", "marked", "--n", "3", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.read_text().splitlines()[1] == "n,x_n,n_x_n_alpha"
    proc = subprocess.run([sys.executable, "-m", "thermoscope", "marked", "--n", "-3"],
                          capture_output=True, text=True)
    assert proc.returncode == 64


def test_workers_flag_not_in_artifact(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["marked", "--n", "20", "--workers", "1", "--out", str(a)])
    main(["marked", "--n", "20", "--workers", "4", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
