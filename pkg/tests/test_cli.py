import csv
import json
import subprocess
import sys

import pytest

from lrcontact.cli import build_parser, main

SMALL = {"scenario": "indent", "degree": 2, "mesh": [4, 4], "steps": {"n": 5, "z_start": 1.1, "z_end": 0.9},
         "adaptive": {"max_depth": 1}}


def _config(tmp_path, **extra):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**SMALL, **extra}))
    return p


def test_indent_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["indent", "--config", str(_config(tmp_path)), "--out", str(out), "--seed", "11"]) == 0
    assert "indent: ok" in capsys.readouterr().out
    rows = list(csv.DictReader(open(out / "forces.csv")))
    assert list(rows[0]) == ["step", "load", "f_n", "f_t", "dofs", "events"]
    assert len(rows) == 5 and "refine" in {r["events"] for r in rows}
    assert json.loads((out / "config.json").read_text())["seed"] == 11
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "ok" and report["final_dofs"] == int(rows[-1]["dofs"])
    assert (out / "mesh_0.json").exists() and (out / "mesh_5.vtk").exists()


def test_uniform_depth_and_compare(tmp_path, capsys):
    cfg = str(_config(tmp_path))
    assert main(["indent", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["indent", "--config", cfg, "--out", str(tmp_path / "u"), "--uniform-depth", "1"]) == 0
    rep = json.loads((tmp_path / "u" / "report.json").read_text())
    assert rep["events"] == [] and rep["config"]["uniform_depth"] == 1
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "u" / "report.json"), "--out", str(tmp_path / "c")]) == 0
    assert "max e_n" in capsys.readouterr().out
    res = json.loads((tmp_path / "c" / "compare.json").read_text())
    assert len(res["rows"]) == 5 and res["max_dof_ratio"] <= 1.0
    header = (tmp_path / "c" / "compare.csv").read_text().splitlines()[0]
    assert header == "step,load,f_n,f_n_ref,e_n,e_t,dof_ratio"


def test_config_errors(tmp_path, capsys):
    assert main(["slide", "--config", str(_config(tmp_path, frction=0.2))]) == 2
    assert "unknown config key 'frction'" in capsys.readouterr().err
    assert main(["slide", "--config", str(_config(tmp_path))]) == 2
    assert "does not match" in capsys.readouterr().err
    assert main(["indent", "--config", str(tmp_path / "missing.json")]) == 2


def test_compare_errors(tmp_path, capsys):
    assert main(["compare", str(tmp_path), str(tmp_path)]) == 2
    assert "no report.json" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["indent", "--uniform-depth", "-1"], ["indent", "--seed", "-3"], ["bend"], []])
def test_bad_arguments(argv):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(argv)
    assert exc.value.code == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "lrcontact", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("inflate", "indent", "slide", "compare"):
        assert cmd in r.stdout
