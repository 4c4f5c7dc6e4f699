import json

import numpy as np
import pytest

from lrcontact.adaptive import element_depths
from lrcontact.lr.io import load_mesh
from lrcontact.scenarios import (
    CompareError,
    ConfigError,
    RunReport,
    analytic_pressure,
    compare_runs,
    load_config,
    resolve_config,
    run,
    sphere_path,
)

SMALL_INDENT = {"scenario": "indent", "degree": 2, "mesh": [4, 4], "steps": {"n": 6, "z_start": 1.2, "z_end": 0.9},
                "adaptive": {"max_depth": 1}}


# -------------------------------------------------------------------- config
def test_defaults():
    assert resolve_config({"scenario": "inflate"})["quadrature"] == 3
    for sc in ("indent", "slide"):
        assert resolve_config({"scenario": sc})["quadrature"] == 5
    cfg = resolve_config({"scenario": "slide", "mu": 2.0, "L0": 0.5})
    assert cfg.E0 == 2.0 and cfg.eps0 == pytest.approx(40.0)
    assert cfg.adaptive_params().max_depth == 2
    assert resolve_config({"scenario": "slide"}, uniform_depth=1).adaptive_params() is None


@pytest.mark.parametrize("raw, msg", [
    ({"scenario": "slide", "frction": 0.1}, "frction"),
    ({"scenario": "indent", "radius": -1.0}, "radius"),
    ({"scenario": "indent", "steps": {"nn": 3}}, "steps.nn"),
    ({"scenario": "indent", "steps": 3}, "steps"),
    ({"scenario": "indent", "mesh": [4]}, "mesh"),
    ({"scenario": "indent", "degree": 1}, "degree"),
    ({"scenario": "inflate", "degree": 3}, "degree"),
    ({"scenario": "indent", "snapshots": "some"}, "snapshots"),
    ({"scenario": "indent", "adaptive": {"d_safe": 5.0}}, "d_crs"),
    ({"scenario": "inflate", "steps": {"v_max": 0.5}}, "v_max"),
    ({"scenario": "peel"}, "scenario"),
])
def test_invalid_configs(raw, msg):
    with pytest.raises(ConfigError, match=msg):
        resolve_config(raw)


def test_load_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"scenario": "indent", "mesh": [2, 2]}))
    cfg = load_config(p, seed=7, uniform_depth=1)
    assert cfg["mesh"] == [2, 2] and cfg["seed"] == 7 and cfg["uniform_depth"] == 1
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)
    p.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="object"):
        load_config(p)


def test_sphere_path():
    c = sphere_path([(0, 0, 1), (0, 0, 0), (2, 0, 0)], [2, 4])
    assert len(c) == 7
    np.testing.assert_allclose(c[2], [0, 0, 0])
    np.testing.assert_allclose(c[4], [1, 0, 0])


# ---------------------------------------------------------------------- runs
def test_inflate_small(tmp_path):
    cfg = resolve_config({"scenario": "inflate", "mesh": [4, 4], "steps": {"v_max": 3.0, "n": 4}})
    rep = run(cfg, tmp_path)
    assert rep.status == "ok" and len(rep.rows) == 4
    np.testing.assert_allclose(rep.column("v_ratio"), [1.5, 2.0, 2.5, 3.0], rtol=1e-9)
    np.testing.assert_allclose(rep.column("p_norm"), analytic_pressure([1.5, 2.0, 2.5, 3.0]), rtol=1e-5)
    for name in ("forces.csv", "events.csv", "pressure.csv", "report.json", "config.json", "mesh_0.json",
                 "mesh_4.vtk"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "forces.csv").read_text().splitlines()[0] == "step,load,f_n,f_t,dofs,events"


def test_inflate_starts_unloaded():
    assert analytic_pressure(1.0) == 0.0
    cfg = resolve_config({"scenario": "inflate", "mesh": [2, 2], "steps": {"v_max": 1.01, "n": 1}})
    rep = run(cfg)
    assert 0 < rep.rows[0]["p_norm"] < 0.05


def test_indent_precontact_and_events(tmp_path):
    rep = run(resolve_config(SMALL_INDENT), tmp_path)
    assert rep.status == "ok"
    fn = rep.column("f_n")
    assert np.all(fn[:4] == 0.0) and np.all(fn[4:] > 0.0)
    assert np.all(rep.column("f_t") == 0.0)
    assert [e["kind"] for e in rep.events] == ["refine"]
    step = rep.events[0]["step"]
    mesh = load_mesh(tmp_path / f"mesh_{step}.json")
    assert element_depths(mesh).max() == 1
    assert mesh.check_linear_independence()
    events = (tmp_path / "events.csv").read_text().splitlines()
    assert events[0].startswith("step,event,") and len(events) == 2


def test_deterministic_outputs(tmp_path):
    cfg = resolve_config(SMALL_INDENT)
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    for name in ("forces.csv", "events.csv", "contact.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_penalty_doubling_halves_penetration():
    gaps = []
    for f in (10.0, 20.0, 40.0):
        cfg = resolve_config({**SMALL_INDENT, "degree": 3, "eps0_factor": f, "adaptive": {"max_depth": 0},
                              "uniform_depth": 1})
        gaps.append(run(cfg).rows[-1]["min_gap"])
    ratios = np.array(gaps[1:]) / np.array(gaps[:-1])
    assert np.all((ratios > 0.4) & (ratios < 0.7))


def test_compare(tmp_path):
    rep = run(resolve_config(SMALL_INDENT), tmp_path)
    same = compare_runs(rep, RunReport.load(tmp_path / "report.json"))
    assert same["max_e_n"] == 0.0 and same["max_e_t"] == 0.0 and same["max_dof_ratio"] == 1.0
    short = RunReport(rep.scenario, rows=rep.rows[:-1])
    with pytest.raises(CompareError, match="schedules"):
        compare_runs(short, rep)
    shifted = RunReport(rep.scenario, rows=[{**r, "load": r["load"] + 1.0} for r in rep.rows])
    with pytest.raises(CompareError):
        compare_runs(shifted, rep)


def test_wrong_runner():
    from lrcontact.scenarios import run_indent

    with pytest.raises(ConfigError):
        run_indent(resolve_config({"scenario": "slide"}))
