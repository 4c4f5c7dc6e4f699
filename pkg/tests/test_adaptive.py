import numpy as np
import pytest

from lrcontact.adaptive import (
    AdaptiveParams,
    box_point_distance,
    coarsen_rebuild,
    element_depths,
    fit_coarse,
    needs_coarsen,
    needs_refine,
    plan_refinement,
    refine,
)
from lrcontact.lr.build import flat_sheet
from lrcontact.membrane import BoundaryCondition, MembraneModel
from lrcontact.solver import SimState

A = np.array([[2.3, 2.1], [2.6, 1.9]])
B = np.array([[6.4, 1.5]])


def _setup(p=2, seed=0):
    base = flat_sheet(8.0, 4.0, 8, 4, p)
    bcs = tuple(BoundaryCondition(e, fix="xyz") for e in ("xi0", "xi1", "eta0", "eta1"))
    model = MembraneModel(base.copy(), nq=3, bcs=bcs)
    T = model.reduction()
    q = 0.05 * np.random.default_rng(seed).standard_normal(T.shape[1])
    return base, model, model.reference_x() + (T @ q).reshape(-1, 3)


def test_box_distance():
    d = box_point_distance([(0, 1, 0, 1)], [[0.5, 0.5], [3.0, 1.5], [-1.0, -0.5]])
    np.testing.assert_allclose(d, [[0.0, 2.0, 1.0]])


def test_params_validation():
    with pytest.raises(ValueError):
        AdaptiveParams(-1)
    with pytest.raises(ValueError):
        AdaptiveParams(2, d_ref=-1.0)
    with pytest.raises(ValueError):
        AdaptiveParams(2, d_safe=2.0, d_crs=2.0)
    p = AdaptiveParams(3, 3.0, 2.0, 4.0)
    assert p.element_length(1) == 1.0 and p.element_length(3) == 0.25
    assert p.ref_dist(2) == 1.5 and p.safe_dist(2) == 1.0 and p.crs_dist() == 4.0


def test_empty_plan():
    base, _, _ = _setup()
    params = AdaptiveParams(2)
    assert plan_refinement(base, np.zeros((0, 2)), params, 1) == []
    assert not needs_refine(base, np.zeros((0, 2)), params)
    assert not needs_coarsen(base, np.zeros((0, 2)), params)


@pytest.mark.parametrize("p", [2, 3])
def test_single_element_plan(p):
    base, _, _ = _setup(p)
    params = AdaptiveParams(1, d_ref=0.0, d_safe=0.0, d_crs=4.0)
    plan = plan_refinement(base, [[3.5, 1.5]], params, 1)
    assert len(plan) == 2
    m = base.copy()
    for line in plan:
        # the line covers the flagged element and splits at least one function
        assert line.fixed in (3.5, 1.5)
        assert line.start <= (1.0 if line.direction == "vertical" else 3.0)
        assert line.end >= (2.0 if line.direction == "vertical" else 4.0)
        assert m.insert(line) > 0
    assert m.check_linear_independence()


@pytest.mark.parametrize("p", [2, 3])
def test_refine_depths_and_independence(p):
    base, _, x = _setup(p)
    params = AdaptiveParams(2, 3.0, 2.0, 4.0)
    mesh, xf, n = refine(base, x, A, params)
    dep = element_depths(mesh)
    assert n > 0 and dep.max() == 2
    dist = box_point_distance(mesh.elements, A).min(axis=1)
    assert np.all(dep[dist <= params.ref_dist(2)].min(axis=1) == 2)
    assert mesh.check_linear_independence()
    # geometry carried exactly
    uv = np.random.default_rng(1).uniform([0, 0], [8, 4], (50, 2))
    before, after = base.copy(), mesh.copy()
    w0, w1 = before.cp_array()[:, 3:4], after.cp_array()[:, 3:4]
    before.set_aux(np.hstack([x * w0, w0])[:, None, :])
    after.set_aux(np.hstack([xf * w1, w1])[:, None, :])
    np.testing.assert_allclose(after.surface_point(*uv.T, layer=0), before.surface_point(*uv.T, layer=0),
                               atol=1e-12)


def test_needs_refine_after_refine():
    base, _, x = _setup()
    params = AdaptiveParams(2, 3.0, 2.0, 4.0)
    mesh, _, _ = refine(base, x, A, params)
    assert needs_refine(base, A, params)
    assert not needs_refine(mesh, A, params)
    assert needs_refine(mesh, A + [2.0, 0.0], params)


def test_safety_trigger_is_inclusive():
    base, _, x = _setup()
    mesh, _, _ = refine(base, x, [[3.5, 1.5]], AdaptiveParams(1, 0.0, 0.0, 4.0))
    coarse = element_depths(mesh).min(axis=1) < 1
    pt = np.array([[3.5, 1.5]])
    gap = box_point_distance(np.array(mesh.elements)[coarse], pt).min()
    assert needs_refine(mesh, pt, AdaptiveParams(1, 0.0, gap, 4.0))
    assert not needs_refine(mesh, pt, AdaptiveParams(1, 0.0, 0.99 * gap, 4.0))


def test_coarsen_trigger_is_strict():
    base, _, x = _setup()
    mesh, _, _ = refine(base, x, [[3.5, 1.5]], AdaptiveParams(1, 0.0, 0.0, 4.0))
    refined = element_depths(mesh).max(axis=1) > 0
    far = box_point_distance(np.array(mesh.elements)[refined], [[3.5, 1.5]]).max()
    assert not needs_coarsen(mesh, [[3.5, 1.5]], AdaptiveParams(1, 0.0, 0.0, far))
    assert needs_coarsen(mesh, [[3.5, 1.5]], AdaptiveParams(1, 0.0, 0.0, 0.99 * far))
    assert not needs_coarsen(base, [[3.5, 1.5]], AdaptiveParams(1, 0.0, 0.0, 0.1))


def test_fit_is_exact_for_base_surfaces():
    base, model, x = _setup()
    mesh, xf, _ = refine(base, x, A, AdaptiveParams(2, 3.0, 2.0, 4.0))
    np.testing.assert_allclose(fit_coarse(base, mesh, xf, model), x, atol=1e-12)


def test_coarsen_round_trip():
    base, model, x = _setup()
    params = AdaptiveParams(2, 3.0, 2.0, 4.0)
    only_a = refine(base, x, A, params)
    both = refine(base, x, np.vstack([A, B]), params)
    assert needs_coarsen(both[0], A, params)
    fine_model = model.with_mesh(both[0])
    st = SimState(both[1].copy(), 0.3, 7, None)
    new_model, new_st = coarsen_rebuild(fine_model, st, base, A, params)
    assert new_model.mesh.keys() == only_a[0].keys()
    np.testing.assert_allclose(new_st.x, only_a[1], atol=1e-12)
    assert new_st.pressure == 0.3 and new_st.step == 7
    # functions present before and after keep their control points bit for bit
    old = both[0].index()
    same = [(i, old[k]) for i, k in enumerate(new_model.mesh.keys()) if k in old]
    i, j = np.array(same).T
    assert np.array_equal(new_st.x[i], st.x[j])
    # inputs untouched
    assert np.array_equal(st.x, both[1]) and fine_model.mesh.keys() == both[0].keys()


def test_refine_then_coarsen_restores_mesh():
    base, model, x = _setup()
    params = AdaptiveParams(2, 3.0, 2.0, 4.0)
    mesh, xf, _ = refine(base, x, A, params)
    m2, st2 = coarsen_rebuild(model.with_mesh(mesh), SimState(xf.copy()), base, A, params)
    assert m2.mesh.keys() == mesh.keys()
    assert np.array_equal(st2.x, xf)
