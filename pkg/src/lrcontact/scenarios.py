"""Scenario setup, configuration, run drivers and run comparison.

Three studies are available: inflation of a hemispherical balloon under a
volume constraint, indentation of a pre-stretched square sheet by a rigid
sphere, and frictionless sliding of a sphere over a cushion-like sheet.
"""
from __future__ import annotations

import copy
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .adaptive import (
    AdaptiveParams,
    CoarseningError,
    Event,
    coarsen_rebuild,
    contact_points,
    element_depths,
    needs_coarsen,
    needs_refine,
    refine,
)
from .contact import ContactParams, RigidSphere, contact_force
from .lr.build import flat_sheet, sphere_octant, subdivide, uniform_refine
from .membrane import BoundaryCondition, MembraneModel
from .output import write_csv, write_mesh_json, write_vtk
from .solver import LoadStepError, SimState, SolveControls, assemble, solve_load_step

log = logging.getLogger(__name__)

SCENARIOS = ("inflate", "indent", "slide")


class ConfigError(ValueError):
    pass


class CompareError(ValueError):
    pass


# --------------------------------------------------------------------- config
_COMMON = {
    "scenario": None,
    "L0": 1.0,
    "radius": 1.0,
    "mu": 1.0,
    "E0": None,
    "eps0_factor": 10.0,
    "uniform_depth": None,
    "seed": 0,
    "out": None,
    "snapshots": "events",
    "solver": {"tol_r": 1e-9, "tol_v": 1e-10, "max_iter": 30, "max_halvings": 8},
}

_DEFAULTS = {
    "inflate": {
        "prestretch": 1.0, "degree": 2, "mesh": [8, 8], "quadrature": 3,
        "adaptive": {"max_depth": 0, "d_ref": 0.0, "d_safe": 0.0, "d_crs": 4.0},
        "steps": {"v_max": 10.0, "n": 18},
    },
    "indent": {
        "prestretch": 1.1, "degree": 3, "mesh": [4, 4], "quadrature": 5,
        "adaptive": {"max_depth": 2, "d_ref": 1.0, "d_safe": 1.0, "d_crs": 4.0},
        "steps": {"n": 10, "z_start": 1.0, "z_end": 0.5},
    },
    "slide": {
        "prestretch": 1.25, "degree": 2, "mesh": [16, 4], "quadrature": 5,
        "adaptive": {"max_depth": 2, "d_ref": 3.0, "d_safe": 2.0, "d_crs": 4.0},
        "steps": {"n_down": 4, "n_lateral": 24, "x_end": 7.0},
    },
}

_SNAPSHOTS = ("events", "all", "final", "none")


def _merge_strict(base: dict, user: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in user.items():
        if k not in base:
            raise ConfigError(f"unknown config key {where + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where + k!r} must be an object")
            out[k] = _merge_strict(base[k], v, where + k + ".")
        else:
            out[k] = v
    return out


@dataclass
class ScenarioConfig:
    """Fully resolved scenario configuration (see :func:`resolve_config`)."""
    data: dict

    def __getitem__(self, key):
        return self.data[key]

    @property
    def scenario(self) -> str:
        return self.data["scenario"]

    @property
    def E0(self) -> float:
        return self.data["E0"] if self.data["E0"] is not None else self.data["mu"]

    @property
    def eps0(self) -> float:
        return self.data["eps0_factor"] * self.E0 / self.data["L0"]

    def adaptive_params(self) -> AdaptiveParams | None:
        if self.data["uniform_depth"] is not None:
            return None
        a = self.data["adaptive"]
        if a["max_depth"] == 0:
            return None
        return AdaptiveParams(int(a["max_depth"]), float(a["d_ref"]), float(a["d_safe"]), float(a["d_crs"]))

    def controls(self) -> SolveControls:
        s = self.data["solver"]
        return SolveControls(float(s["tol_r"]), float(s["tol_v"]), int(s["max_iter"]), int(s["max_halvings"]))

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)


def resolve_config(raw: dict, **overrides) -> ScenarioConfig:
    """Apply defaults and overrides to a raw config dict and validate it."""
    raw = dict(raw)
    for k, v in overrides.items():
        if v is not None:
            raw[k] = v
    sc = raw.get("scenario")
    if sc not in SCENARIOS:
        raise ConfigError(f"'scenario' must be one of {SCENARIOS}, got {sc!r}")
    base = copy.deepcopy(_COMMON)
    base.update(copy.deepcopy(_DEFAULTS[sc]))
    data = _merge_strict(base, raw)
    _validate(data)
    return ScenarioConfig(data)


def _positive(data, *keys):
    for k in keys:
        v = data[k]
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigError(f"{k} must be a positive number, got {v!r}")


def _validate(d: dict) -> None:
    _positive(d, "L0", "radius", "mu", "eps0_factor", "prestretch")
    if d["E0"] is not None:
        _positive(d, "E0")
    if not isinstance(d["degree"], int) or d["degree"] < 2:
        raise ConfigError(f"degree must be an integer >= 2, got {d['degree']!r}")
    if d["scenario"] == "inflate" and d["degree"] != 2:
        raise ConfigError("the hemisphere patch is biquadratic; degree must be 2")
    mesh = d["mesh"]
    if not (isinstance(mesh, list) and len(mesh) == 2 and all(isinstance(n, int) and n >= 1 for n in mesh)):
        raise ConfigError(f"mesh must be two positive integers, got {mesh!r}")
    if not isinstance(d["quadrature"], int) or d["quadrature"] < 1:
        raise ConfigError("quadrature must be a positive integer")
    ud = d["uniform_depth"]
    if ud is not None and (not isinstance(ud, int) or ud < 0):
        raise ConfigError(f"uniform_depth must be a non-negative integer, got {ud!r}")
    if not isinstance(d["seed"], int) or d["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    if d["snapshots"] not in _SNAPSHOTS:
        raise ConfigError(f"snapshots must be one of {_SNAPSHOTS}")
    s = d["steps"]
    counts = [v for k, v in s.items() if k.startswith("n")]
    if not all(isinstance(n, int) and n >= 1 for n in counts):
        raise ConfigError(f"step counts must be positive integers, got {s!r}")
    if d["scenario"] == "inflate" and not s["v_max"] > 1:
        raise ConfigError("steps.v_max must exceed 1")
    a = d["adaptive"]
    try:
        AdaptiveParams(int(a["max_depth"]), float(a["d_ref"]), float(a["d_safe"]), float(a["d_crs"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"adaptive: {exc}") from exc


def load_config(path, **overrides) -> ScenarioConfig:
    """Parse a JSON scenario file, fill defaults and validate."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return resolve_config(raw, **overrides)


# --------------------------------------------------------------------- report
@dataclass
class RunReport:
    scenario: str
    status: str = "ok"
    rows: list = field(default_factory=list)
    events: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    wall_clock: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    message: str = ""

    @property
    def final_dofs(self) -> int:
        return self.rows[-1]["dofs"] if self.rows else 0

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["final_dofs"] = self.final_dofs
        return d

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, default=float))

    @classmethod
    def load(cls, path) -> "RunReport":
        d = json.loads(Path(path).read_text())
        d.pop("final_dofs", None)
        return cls(**d)


class _Clock:
    def __init__(self):
        self.t = {}

    def add(self, phase, dt):
        self.t[phase] = self.t.get(phase, 0.0) + dt


# ------------------------------------------------------------------ geometry
def hemisphere_model(cfg: ScenarioConfig) -> MembraneModel:
    nx, ny = cfg["mesh"]
    mesh = subdivide(sphere_octant(cfg["radius"]), nx, ny)
    uniform_refine(mesh, cfg["uniform_depth"] or 0)
    bcs = (BoundaryCondition("xi0", fix="y"), BoundaryCondition("xi1", fix="x"),
           BoundaryCondition("eta0", fix="z"), BoundaryCondition("eta1", fix="xy", tie="z"))
    return MembraneModel(mesh, cfg["mu"], cfg["quadrature"], cfg["prestretch"], bcs, 4.0, cfg["radius"])


def sheet_model(cfg: ScenarioConfig):
    """Sheet model, base mesh, sphere path waypoints/steps and force factors.

    The factors map the patch's contact force (x, y, z) to the full sheet;
    on the quarter model the in-plane components cancel by symmetry.
    """
    L, lam, p = cfg["L0"], cfg["prestretch"], cfg["degree"]
    nx, ny = cfg["mesh"]
    s = cfg["steps"]
    if cfg.scenario == "indent":
        # quarter model of a 2L0 x 2L0 sheet (stretched state), symmetric about X = 0 and Y = 0
        base = flat_sheet(2 * L, 2 * L, nx, ny, p)
        bcs = (BoundaryCondition("xi0", fix="x"), BoundaryCondition("eta0", fix="y"),
               BoundaryCondition("xi1", fix="xyz"), BoundaryCondition("eta1", fix="xyz"))
        volume_factor = None
        way = [(0.0, 0.0, s["z_start"] * L), (0.0, 0.0, s["z_end"] * L)]
        counts = [s["n"]]
        factor = np.array([0.0, 0.0, 4.0])
    else:
        base = flat_sheet(8 * lam * L, 2 * lam * L, nx, ny, p)
        bcs = tuple(BoundaryCondition(e, fix="xyz") for e in ("xi0", "xi1", "eta0", "eta1"))
        volume_factor = 1.0
        way = [(lam * L, lam * L, lam * L), (lam * L, lam * L, lam * L / 2),
               (s["x_end"] * lam * L, lam * L, lam * L / 2)]
        counts = [s["n_down"], s["n_lateral"]]
        factor = np.ones(3)
    mesh = base.copy()
    uniform_refine(mesh, cfg["uniform_depth"] or 0)
    model = MembraneModel(mesh, cfg["mu"], cfg["quadrature"], lam, bcs, volume_factor, L)
    return model, base, way, counts, factor


def sphere_path(way, counts) -> list[np.ndarray]:
    """Sphere centers at every step, starting with the initial position."""
    out = [np.asarray(way[0], dtype=float)]
    for a, b, n in zip(way, way[1:], counts):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        out += [a + (b - a) * k / n for k in range(1, n + 1)]
    return out


# ---------------------------------------------------------------------- runs
def free_dofs(model: MembraneModel) -> int:
    """Number of unknown control point coordinates left free by the boundary conditions."""
    return int(model.reduction().shape[1])


def analytic_pressure(v_ratio):
    """Normalized pressure ``p R / mu`` of an inflated incompressible Neo-Hookean sphere."""
    r = np.asarray(v_ratio, dtype=float)
    return 2.0 * (r ** (-1.0 / 3.0) - r ** (-7.0 / 3.0))


def _snapshot(out, cfg, step, model, x, is_event, is_last):
    if out is None:
        return
    mode = cfg["snapshots"]
    if mode == "all" or (mode == "events" and (is_event or is_last or step == 0)) or (mode == "final" and is_last):
        write_mesh_json(out / f"mesh_{step}.json", model.mesh, x)
        write_vtk(out / f"mesh_{step}.vtk", model.mesh, x)


def run_inflate(cfg: ScenarioConfig, out=None) -> RunReport:
    """Step the enclosed volume of the hemisphere from V0 to ``v_max V0``."""
    out = _prepare(out, cfg)
    clock = _Clock()
    rep = RunReport("inflate", config=cfg.data)
    model = hemisphere_model(cfg)
    x0 = model.reference_x()
    V0 = model.volume(x0, tangent=False)[0]
    st = SimState(x0.copy(), 0.0, 0, V0)
    ctl = cfg.controls()
    R, mu = cfg["radius"], cfg["mu"]
    ratios = np.linspace(1.0, cfg["steps"]["v_max"], cfg["steps"]["n"] + 1)[1:]
    dofs = free_dofs(model)
    _snapshot(out, cfg, 0, model, st.x, False, False)
    for i, r in enumerate(ratios, start=1):
        prev = st.v_target
        t0 = time.perf_counter()
        try:
            st, its = solve_load_step(model, st, lambda s, prev=prev, r=r: (None, (1 - s) * prev + s * r * V0), ctl)
        except LoadStepError as exc:
            rep.status, rep.message = "failed", str(exc)
            break
        clock.add("solve", time.perf_counter() - t0)
        a = assemble(model, st, tangent=False)
        res = float(np.linalg.norm(model.reduction().T @ a.residual))
        p = st.pressure * R / mu
        ana = float(analytic_pressure(r))
        rep.rows.append({"step": i, "load": float(r), "f_n": 0.0, "f_t": 0.0, "dofs": dofs, "events": "",
                         "v_ratio": float(a.volume / V0), "p_norm": p, "p_analytic": ana,
                         "rel_error": abs(p - ana) / abs(ana), "residual": res, "iterations": its})
        _snapshot(out, cfg, i, model, st.x, False, i == len(ratios))
    err = rep.column("rel_error") if rep.rows else np.array([np.nan])
    rep.metrics = {"max_rel_error": float(err.max()), "V0": float(V0), "elements": len(model.mesh.elements)}
    if rep.rows and cfg["steps"]["v_max"] >= 8:
        rep.metrics["p_norm_at_8"] = float(np.interp(8.0, rep.column("load"), rep.column("p_norm")))
    rep.wall_clock = clock.t
    _finish(out, rep, cfg)
    return rep


def _forces(model, st, sphere, cparams, factor):
    res = contact_force(model.disc, st.x, sphere, cparams, tangent=False)
    F = res.total() * factor
    return -F[2] + 0.0, -F[0] + 0.0, int(res.active.any(axis=1).sum()), float(min(res.gap.min(), 0.0))


def run_contact(cfg: ScenarioConfig, out=None) -> RunReport:
    """Indentation or sliding with optional adaptive refinement and coarsening."""
    out = _prepare(out, cfg)
    clock = _Clock()
    rep = RunReport(cfg.scenario, config=cfg.data)
    model, base, way, counts, factor = sheet_model(cfg)
    params = cfg.adaptive_params()
    cparams = ContactParams(cfg.eps0, cfg["degree"])
    ctl = cfg.controls()
    ctl.extra["contact"] = cparams
    nq = cfg["quadrature"]
    sphere = RigidSphere(way[0], cfg["radius"])
    centers = sphere_path(way, counts)
    x0 = model.reference_x()
    vt = model.volume(x0, tangent=False)[0] if model.volume_factor is not None else None
    st = SimState(x0.copy(), 0.0, 0, vt)
    travelled = 0.0
    _snapshot(out, cfg, 0, model, st.x, False, False)
    contact_rows = []

    def resolve(model, st, sph):
        t0 = time.perf_counter()
        st, _ = solve_load_step(model, st, lambda s: (sph, st.v_target), ctl)
        clock.add("solve", time.perf_counter() - t0)
        return st

    for step in range(1, len(centers)):
        c0, c1 = centers[step - 1], centers[step]
        sph = sphere.moved(c1)
        names = []
        try:
            t0 = time.perf_counter()
            st, _ = solve_load_step(model, st, lambda s: (sphere.moved(c0 + (c1 - c0) * s), st.v_target), ctl)
            clock.add("solve", time.perf_counter() - t0)
            if params is not None:
                pts, _ = contact_points(model.mesh, st.x, sph, cparams, nq)
                if needs_coarsen(model.mesh, pts, params):
                    t0 = time.perf_counter()
                    before = _forces(model, st, sph, cparams, factor)
                    ne, nd = len(model.mesh.elements), free_dofs(model)
                    try:
                        model, st = coarsen_rebuild(model, st, base, pts, params)
                    except CoarseningError as exc:
                        log.warning("coarsening aborted: %s", exc)
                    else:
                        clock.add("coarsen", time.perf_counter() - t0)
                        st = resolve(model, st, sph)
                        after = _forces(model, st, sph, cparams, factor)
                        rep.events.append(asdict(Event(step, "coarsen", ne, len(model.mesh.elements), nd,
                                                       free_dofs(model), after[0], after[1],
                                                       {"f_n_before": before[0], "f_t_before": before[1]})))
                        names.append("coarsen")
                for _ in range(3):
                    pts, _ = contact_points(model.mesh, st.x, sph, cparams, nq)
                    if not needs_refine(model.mesh, pts, params):
                        break
                    t0 = time.perf_counter()
                    mesh, x, nl = refine(model.mesh, st.x, pts, params)
                    if nl == 0:
                        break
                    before = _forces(model, st, sph, cparams, factor)
                    ne, nd = len(model.mesh.elements), free_dofs(model)
                    model = model.with_mesh(mesh)
                    st = SimState(x, st.pressure, st.step, st.v_target)
                    clock.add("refine", time.perf_counter() - t0)
                    st = resolve(model, st, sph)
                    after = _forces(model, st, sph, cparams, factor)
                    rep.events.append(asdict(Event(step, "refine", ne, len(model.mesh.elements), nd,
                                                   free_dofs(model), after[0], after[1],
                                                   {"f_n_before": before[0], "f_t_before": before[1]})))
                    names.append("refine")
        except LoadStepError as exc:
            rep.status, rep.message = "failed", f"step {step}: {exc}"
            log.error(rep.message)
            break
        travelled += float(np.linalg.norm(c1 - c0))
        f_n, f_t, n_act, gmin = _forces(model, st, sph, cparams, factor)
        dep = element_depths(model.mesh).min(axis=1)
        act = contact_points(model.mesh, st.x, sph, cparams, nq)[1]
        rep.rows.append({"step": step, "load": travelled / cfg["L0"], "f_n": f_n, "f_t": f_t,
                         "dofs": free_dofs(model), "events": "+".join(names),
                         "elements": len(model.mesh.elements), "active_elements": n_act,
                         "min_gap": gmin, "max_depth": int(dep.max()),
                         "contact_min_depth": int(dep[act].min()) if act.size else -1, "center": [float(c) for c in c1],
                         "pressure": st.pressure})
        contact_rows.append([step, *c1, f_n, f_t, n_act])
        _snapshot(out, cfg, step, model, st.x, bool(names), step == len(centers) - 1)
    if out is not None:
        write_csv(out / "contact.csv", ["step", "cx", "cy", "cz", "f_n", "f_t", "active_elements"], contact_rows)
    fn = rep.column("f_n") if rep.rows else np.zeros(1)
    ft = rep.column("f_t") if rep.rows else np.zeros(1)
    rep.metrics = {"max_f_n": float(fn.max()), "max_abs_f_t": float(np.abs(ft).max()),
                   "final_dofs": rep.final_dofs, "n_events": len(rep.events),
                   "max_dofs": int(max((r["dofs"] for r in rep.rows), default=0))}
    rep.wall_clock = clock.t
    _finish(out, rep, cfg)
    return rep


def run_indent(cfg: ScenarioConfig, out=None) -> RunReport:
    """Push the sphere into the quarter sheet (adaptive unless ``uniform_depth`` is set)."""
    if cfg.scenario != "indent":
        raise ConfigError("run_indent needs an indent config")
    return run_contact(cfg, out)


def run_slide(cfg: ScenarioConfig, out=None) -> RunReport:
    """Press the sphere into the cushion, then slide it along the sheet."""
    if cfg.scenario != "slide":
        raise ConfigError("run_slide needs a slide config")
    return run_contact(cfg, out)


RUNNERS = {"inflate": run_inflate, "indent": run_indent, "slide": run_slide}


def run(cfg: ScenarioConfig, out=None) -> RunReport:
    return RUNNERS[cfg.scenario](cfg, out)


# ----------------------------------------------------------------- comparison
def compare_runs(report: RunReport, reference: RunReport) -> dict:
    """Per-step relative force errors and dof ratios against a reference run."""
    if len(report.rows) != len(reference.rows):
        raise CompareError(f"schedules differ: {len(report.rows)} vs {len(reference.rows)} steps")
    la, lb = report.column("load"), reference.column("load")
    if not np.allclose(la, lb, rtol=1e-12, atol=1e-12):
        raise CompareError("schedules differ in their load values")
    fn, fr = report.column("f_n"), reference.column("f_n")
    ft, tr = report.column("f_t"), reference.column("f_t")
    scale = np.abs(fr).max() if np.abs(fr).max() > 0 else 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        e_n = np.where(fr != 0, np.abs(fr - fn) / np.abs(fr), np.where(fn == 0, 0.0, np.inf))
    e_t = np.abs(tr - ft) / scale
    ratio = report.column("dofs") / reference.column("dofs")
    rows = [{"step": int(s), "load": float(l), "f_n": float(a), "f_n_ref": float(b), "e_n": float(en),
             "e_t": float(et), "dof_ratio": float(q)}
            for s, l, a, b, en, et, q in zip(report.column("step"), la, fn, fr, e_n, e_t, ratio)]
    return {"rows": rows, "max_e_n": float(e_n.max()), "max_e_t": float(e_t.max()),
            "max_dof_ratio": float(ratio.max()), "final_dof_ratio": float(ratio[-1])}


# -------------------------------------------------------------------- output
def _prepare(out, cfg: ScenarioConfig):
    out = out if out is not None else cfg["out"]
    if out is None:
        return None
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.to_json() + "\n")
    return out


def _finish(out, rep: RunReport, cfg: ScenarioConfig) -> None:
    if out is None:
        return
    write_csv(out / "forces.csv", ["step", "load", "f_n", "f_t", "dofs", "events"],
              [[r["step"], r["load"], r["f_n"], r["f_t"], r["dofs"], r["events"]] for r in rep.rows])
    write_csv(out / "events.csv", ["step", "event", "elements_before", "elements_after", "dofs_before",
                                   "dofs_after", "f_n", "f_t"],
              [[e["step"], e["kind"], e["elements_before"], e["elements_after"], e["dofs_before"],
                e["dofs_after"], e["f_n"], e["f_t"]] for e in rep.events])
    if rep.scenario == "inflate":
        write_csv(out / "pressure.csv", ["step", "v_ratio", "p_norm", "p_analytic", "rel_error", "residual",
                                         "iterations"],
                  [[r["step"], r["v_ratio"], r["p_norm"], r["p_analytic"], r["rel_error"], r["residual"],
                    r["iterations"]] for r in rep.rows])
    rep.save(out / "report.json")
