import numpy as np
import pytest

from lrcontact.contact import ContactParams, RigidSphere
from lrcontact.lr.build import flat_sheet
from lrcontact.membrane import BoundaryCondition, MembraneModel
from lrcontact.scenarios import analytic_pressure, hemisphere_model, resolve_config
from lrcontact.solver import (
    LoadStepError,
    SimState,
    SolveControls,
    assemble,
    newton_solve,
    solve_load_step,
)


def _balloon(n=4, nq=3):
    model = hemisphere_model(resolve_config({"scenario": "inflate", "mesh": [n, n], "quadrature": nq}))
    x0 = model.reference_x()
    return model, SimState(x0.copy(), 0.0, 0, model.volume(x0, False)[0])


def test_reference_state_is_equilibrium():
    model, st = _balloon()
    a = assemble(model, st)
    assert np.abs(model.reduction().T @ a.residual).max() < 1e-13
    assert a.constraint == pytest.approx(0.0, abs=1e-15)
    out, its = newton_solve(model, st)
    assert its == 0


def test_double_volume_pressure():
    model, st = _balloon(8)
    V0 = st.v_target
    out, its = solve_load_step(model, st, lambda s: (None, (1 + s) * V0))
    assert out.step == 1
    assert out.pressure == pytest.approx(analytic_pressure(2.0), rel=1e-7)
    assert assemble(model, out, tangent=False).volume == pytest.approx(2 * V0, rel=1e-9)


def test_quadrature_insensitive():
    p = []
    for nq in (3, 5):
        model, st = _balloon(4, nq)
        p.append(solve_load_step(model, st, lambda s, V0=st.v_target: (None, (1 + s) * V0))[0].pressure)
    assert abs(p[0] - p[1]) < 1e-6


def test_failed_step_leaves_state():
    model, st = _balloon()
    x = st.x.copy()
    with pytest.raises(LoadStepError):
        solve_load_step(model, st, lambda s: (None, (1 - s) * st.v_target), SolveControls(max_halvings=2))
    assert np.array_equal(st.x, x) and st.pressure == 0.0 and st.step == 0


def test_contact_step_converges():
    m = flat_sheet(2.0, 2.0, 4, 4, 2)
    bcs = tuple(BoundaryCondition(e, fix="xyz") for e in ("xi0", "xi1", "eta0", "eta1"))
    model = MembraneModel(m, nq=4, prestretch=1.1, bcs=bcs)
    cp = ContactParams(10.0, 2)
    ctl = SolveControls(extra={"contact": cp})
    st = SimState(model.reference_x().copy())
    out, _ = solve_load_step(model, st, lambda s: (RigidSphere((1.0, 1.0, 1.0 - 0.2 * s), 1.0), None), ctl)
    a = assemble(model, out, RigidSphere((1.0, 1.0, 0.8), 1.0), cp, tangent=False)
    assert np.linalg.norm(model.reduction().T @ a.residual) < 1e-9
    assert a.contact.active.any()
    assert out.x[:, 2].min() < -0.1
