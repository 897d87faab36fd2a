import csv
import hashlib
import io
import json
import subprocess
import sys

import pytest

from geoapprox.cli import ConfigError, main, parse_pmf
from geoapprox.pmf import geometric, tv


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def read_rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_ua_grid_all_pass(tmp_path, capsys):
    assert run(tmp_path, "ua", "--n-grid", "2,5,10,50,100") == 0
    rows = read_rows(tmp_path / "ua.csv")
    assert len(rows) == 5
    assert {r["status"] for r in rows} == {"PASS"}
    assert "5 rows, 5 PASS" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "ua.manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["rows"] == 5
    assert manifest["sha256"] == hashlib.sha256((tmp_path / "ua.csv").read_bytes()).hexdigest()
    assert (tmp_path / "ua.summary.txt").read_text().startswith("PASS")


def test_yule_check_passes(tmp_path):
    assert run(tmp_path, "yule-check", "--kmax", "100") == 0
    (row,) = read_rows(tmp_path / "yule-check.csv")
    assert float(row["lhs"]) <= 1e-8 and row["status"] == "PASS"


def test_pa_mixture_rows_are_soft(tmp_path):
    assert run(tmp_path, "pa-mixture", "--n-grid", "50,100,200") == 0
    rows = read_rows(tmp_path / "pa-mixture.csv")
    assert len(rows) == 3
    assert {r["status"] for r in rows} == {"SOFT"}
    assert all(float(r["empirical_C"]) > 0 for r in rows)


def test_hard_failure_exit_code(tmp_path):
    # The unconditional smoothness variant of one inequality has counterexamples.
    assert run(tmp_path, "sweep-validity", "--count", "200") == 1
    assert any(r["status"] == "FAIL" for r in read_rows(tmp_path / "sweep-validity.csv"))


@pytest.mark.parametrize("argv,message", [
    (["gw", "--offspring", "0:0.2,1:0.5,2:0.3"], "offspring not critical"),
    (["pa-fixed", "--n", "10", "--i-grid", "3,11"], "outside 1..10"),
    (["gsum", "--a-grid", "0"], "outside (0, 1]"),
    (["gsum", "--summands", "1:0.5,2:0.5;1:1"], "means differ"),
    (["gsum", "--summands", "1:0.5,2:0.4"], "sum"),
    (["ua", "--n-grid", "0,4"], "at least 1"),
])
def test_config_errors(tmp_path, capsys, argv, message):
    assert run(tmp_path, *argv) == 2
    assert message in capsys.readouterr().err
    assert not any(tmp_path.iterdir())


def test_validate_prints_resolved_defaults(tmp_path, capsys):
    assert run(tmp_path, "gsum", "--validate") == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["params"]["start"] == 1 and shown["params"]["reps"] == 100_000
    assert shown["params"]["a_grid"] == [0.1, 0.3, 0.5, 0.9]
    assert not any(tmp_path.iterdir())


def test_identical_runs_are_byte_identical(tmp_path):
    argv = ["gsum", "--summands", "unif(1,3)", "--a-grid", "0.5,0.2", "--reps", "4000",
            "--shards", "4", "--seed", "11"]
    run(tmp_path / "a", *argv)
    run(tmp_path / "b", *argv, "--workers", "2")
    assert (tmp_path / "a" / "gsum.csv").read_bytes() == (tmp_path / "b" / "gsum.csv").read_bytes()
    rows = read_rows(tmp_path / "a" / "gsum.csv")
    assert [float(r["a"]) for r in rows][:2] == [0.2, 0.2]
    run(tmp_path / "c", *argv[:-1], "12")
    assert (tmp_path / "a" / "gsum.csv").read_bytes() != (tmp_path / "c" / "gsum.csv").read_bytes()


def test_environment_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("GEOAPPROX_OUT", str(tmp_path / "env"))
    monkeypatch.setenv("GEOAPPROX_SHARDS", "3")
    assert main(["gw", "--n-grid", "8", "--reps", "300"]) == 0
    manifest = json.loads((tmp_path / "env" / "gw.manifest.json").read_text())
    assert manifest["params"]["reps"] == 300
    assert {r["n"] for r in read_rows(tmp_path / "env" / "gw.csv")} == {"8"}


def test_json_format(tmp_path):
    assert run(tmp_path, "ua", "--n-grid", "3", "--format", "json") == 0
    rows = json.loads((tmp_path / "ua.json").read_text())
    assert rows[0]["status"] == "PASS"


def test_pa_fixed_with_coupling_rows(tmp_path):
    assert run(tmp_path, "pa-fixed", "--n", "50", "--i-grid", "5", "--reps", "20000") == 0
    tags = [r["theorem_tag"] for r in read_rows(tmp_path / "pa-fixed.csv")]
    assert tags == ["pa-fixed", "pa-fixed-coupling", "pa-fixed-marginal"]


def test_stein_check(tmp_path):
    assert run(tmp_path, "stein-check", "--set", "2", "--p-grid", "0.3,0.7") == 0
    assert len(read_rows(tmp_path / "stein-check.csv")) == 6


def test_dist_and_transform(capsys):
    assert main(["dist", "ge(0.5)", "ge(0.4)", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["tv"] == pytest.approx(tv(geometric(0.5), geometric(0.4)))
    assert main(["transform", "1:0.5,2:0.5", "--kind", "equilibrium-pos"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "k,p"
    assert [float(x.split(",")[1]) for x in lines[1:]] == pytest.approx([2 / 3, 1 / 3])


def test_parse_pmf_sources(tmp_path):
    assert parse_pmf("0:0.25,1:0.5,2:0.25").mean == pytest.approx(1.0)
    assert parse_pmf("ge0(0.5)")(0) == pytest.approx(0.5)
    (tmp_path / "a.json").write_text(json.dumps({"offset": 2, "probs": [0.5, 0.5]}))
    (tmp_path / "b.json").write_text(json.dumps({"3": 0.25, "5": 0.75}))
    assert parse_pmf(str(tmp_path / "a.json")).lo == 2
    assert parse_pmf(str(tmp_path / "b.json"))(5) == pytest.approx(0.75)
    with pytest.raises((ConfigError, ValueError)):
        parse_pmf("nonsense(1)")


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "geoapprox.cli", "ua", "--n-grid", "4",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and "PASS" in proc.stdout
