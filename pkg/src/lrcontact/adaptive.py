"""Contact-driven local refinement and coarsening of LR meshes.

Distances are measured in parameter space with the L-infinity norm between
active contact points (quadrature points with negative gap) and element
boxes. One base element is ``base_length`` parametric units wide, and the
element length of the previous depth is ``d_e(d) = base_length 2**(1-d)``.

* refinement at depth ``d`` flags elements of depth ``< d`` within
  ``d_ref d_e(d)`` of a contact point and bisects them;
* ``needs_refine`` fires when an element of depth ``< d`` lies within
  ``d_safe d_e(d)`` of a contact point (inclusive);
* ``needs_coarsen`` fires when a refined element lies farther than
  ``d_crs base_length`` from every contact point (strict).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .contact import ContactParams, RigidSphere, contact_force
from .discretize import discretize
from .lr.mesh import HORIZONTAL, VERTICAL, LRMesh, Meshline
from .membrane import MembraneModel
from .solver import SimState

log = logging.getLogger(__name__)

_EPS = 1e-9


class CoarseningError(RuntimeError):
    pass


@dataclass(frozen=True)
class AdaptiveParams:
    """Refinement control; distances are multiples of element lengths."""
    max_depth: int
    d_ref: float = 3.0
    d_safe: float = 2.0
    d_crs: float = 4.0
    base_length: float = 1.0

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max depth must be >= 0")
        if self.d_ref < 0 or self.d_safe < 0:
            raise ValueError("d_ref and d_safe must be non-negative")
        if self.max_depth > 0 and not self.crs_dist() > self.safe_dist(1):
            raise ValueError("d_crs must exceed d_safe")

    def element_length(self, d: int) -> float:
        """Element length of depth ``d - 1``."""
        return self.base_length * 2.0 ** (1 - d)

    def ref_dist(self, d: int) -> float:
        return self.d_ref * self.element_length(d)

    def safe_dist(self, d: int) -> float:
        return self.d_safe * self.element_length(d)

    def crs_dist(self) -> float:
        return self.d_crs * self.base_length


# ------------------------------------------------------------------ geometry
def element_depths(mesh: LRMesh, base_length: float = 1.0) -> np.ndarray:
    """(E, 2) per-direction refinement depth of each element."""
    b = np.array(mesh.elements)
    w = np.stack([b[:, 1] - b[:, 0], b[:, 3] - b[:, 2]], axis=1)
    return np.rint(np.log2(base_length / w)).astype(int)


def box_point_distance(boxes, points) -> np.ndarray:
    """(E, P) L-infinity distance from boxes (E, 4) to points (P, 2)."""
    b = np.asarray(boxes, dtype=float)[:, None, :]
    p = np.asarray(points, dtype=float).reshape(-1, 2)[None]
    dx = np.maximum(np.maximum(b[..., 0] - p[..., 0], p[..., 0] - b[..., 1]), 0.0)
    dy = np.maximum(np.maximum(b[..., 2] - p[..., 1], p[..., 1] - b[..., 3]), 0.0)
    return np.maximum(dx, dy)


def _min_dist(mesh: LRMesh, points) -> np.ndarray:
    if len(points) == 0:
        return np.full(len(mesh.elements), np.inf)
    return box_point_distance(mesh.elements, points).min(axis=1)


def contact_points(mesh: LRMesh, x, sphere: RigidSphere, cparams: ContactParams, nq: int):
    """Parametric coordinates of active quadrature points and the contact element set."""
    disc = discretize(mesh, nq)
    gap = contact_force(disc, x, sphere, cparams, tangent=False).gap
    act = gap < 0.0
    return disc.points[act], np.flatnonzero(act.any(axis=1))


def contact_domain(mesh: LRMesh, x, sphere: RigidSphere, cparams: ContactParams, nq: int = 5):
    """Elements with at least one penetrating quadrature point."""
    return contact_points(mesh, x, sphere, cparams, nq)[1]


# ------------------------------------------------------------------ planning
def _line_extent(mesh: LRMesh, e: int, axis: int) -> tuple[float, float]:
    """Support interval, along ``axis``, of the best function covering element ``e``.

    Picks the smallest extent, then the support most centred on the element.
    """
    box = mesh.elements[e]
    sup = mesh.support_arrays()[mesh.element_functions(box)]
    lo, hi = sup[:, 2 * axis], sup[:, 2 * axis + 1]
    mid = 0.5 * (box[2 * axis] + box[2 * axis + 1])
    order = np.lexsort((lo, np.abs(0.5 * (lo + hi) - mid), np.round(hi - lo, 12)))
    k = order[0]
    return float(lo[k]), float(hi[k])


def _merge(segments):
    out = []
    for s, e in sorted(segments):
        if out and s <= out[-1][1] + _EPS:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return out


def flag_elements(mesh: LRMesh, points, params: AdaptiveParams, d: int) -> np.ndarray:
    if d > params.max_depth or len(points) == 0:
        return np.zeros(0, dtype=int)
    depth = element_depths(mesh, params.base_length).min(axis=1)
    near = _min_dist(mesh, points) <= params.ref_dist(d) + _EPS
    return np.flatnonzero(near & (depth < d))


def plan_refinement(mesh: LRMesh, points, params: AdaptiveParams, d: int) -> list[Meshline]:
    """Meshlines bisecting every element flagged at depth ``d``.

    Each bisector spans the support of a function on the element in the
    line direction, so it splits at least that function; collinear pieces
    are merged. Vertical lines come first.
    """
    flagged = flag_elements(mesh, points, params, d)
    dep = element_depths(mesh, params.base_length)
    segs = {VERTICAL: {}, HORIZONTAL: {}}
    for e in flagged:
        u0, u1, v0, v1 = mesh.elements[e]
        if dep[e, 0] < d:
            segs[VERTICAL].setdefault(0.5 * (u0 + u1), []).append(_line_extent(mesh, e, 1))
        if dep[e, 1] < d:
            segs[HORIZONTAL].setdefault(0.5 * (v0 + v1), []).append(_line_extent(mesh, e, 0))
    plan = []
    for direction in (VERTICAL, HORIZONTAL):
        for c in sorted(segs[direction]):
            plan += [Meshline(direction, c, s, t) for s, t in _merge(segs[direction][c])]
    return plan


def apply_lines(mesh: LRMesh, x, lines) -> tuple[LRMesh, np.ndarray]:
    """Insert meshlines into a copy of ``mesh`` carrying positions ``x`` along."""
    new = mesh.copy()
    w = new.cp_array()[:, 3:4]
    new.set_aux(np.hstack([x * w, w])[:, None, :])
    for line in lines:
        new.insert(line)
    h = new.get_aux()[:, 0]
    return new, h[:, :3] / h[:, 3:4]


def refine(mesh: LRMesh, x, points, params: AdaptiveParams):
    """Refine depth by depth around fixed parametric contact points.

    Returns the new mesh, positions and the number of inserted lines.
    """
    total = 0
    for d in range(1, params.max_depth + 1):
        plan = plan_refinement(mesh, points, params, d)
        if plan:
            mesh, x = apply_lines(mesh, x, plan)
            total += len(plan)
    return mesh, x, total


def needs_refine(mesh: LRMesh, points, params: AdaptiveParams) -> bool:
    if len(points) == 0:
        return False
    depth = element_depths(mesh, params.base_length).min(axis=1)
    dist = _min_dist(mesh, points)
    for d in range(1, params.max_depth + 1):
        if np.any((depth < d) & (dist <= params.safe_dist(d) + _EPS)):
            return True
    return False


def needs_coarsen(mesh: LRMesh, points, params: AdaptiveParams) -> bool:
    depth = element_depths(mesh, params.base_length).max(axis=1)
    refined = depth > 0
    if not refined.any():
        return False
    return bool(np.any(refined & (_min_dist(mesh, points) > params.crs_dist() + _EPS)))


# ---------------------------------------------------------------- coarsening
def fit_coarse(base: LRMesh, fine: LRMesh, x_fine, model: MembraneModel):
    """Least-squares fit of the deformed fine surface in the base mesh space.

    Samples at the base Greville points and element midpoints; only the
    free coordinates of the boundary-condition map are fitted.
    """
    pts = np.vstack([base.greville_points(),
                     [[0.5 * (a + b), 0.5 * (c + d)] for a, b, c, d in base.elements]])
    w = fine.cp_array()[:, 3:4]
    fine = fine.copy()
    fine.set_aux(np.hstack([x_fine * w, w])[:, None, :])
    target = fine.surface_point(pts[:, 0], pts[:, 1], layer=0)
    R = base.rational_basis(pts[:, 0], pts[:, 1])
    cm = model.with_mesh(base)
    T = cm.reduction().toarray()
    x0 = cm.reference_x().ravel() * (T.sum(axis=1) == 0)
    M = np.kron(R, np.eye(3))
    A = M @ T
    rank = np.linalg.matrix_rank(A)
    if rank < A.shape[1]:
        raise CoarseningError(f"interpolation system singular (rank {rank} < {A.shape[1]})")
    q = np.linalg.lstsq(A, target.ravel() - M @ x0, rcond=None)[0]
    return (x0 + T @ q).reshape(-1, 3)


def coarsen_rebuild(model: MembraneModel, state: SimState, base: LRMesh, points,
                    params: AdaptiveParams):
    """Six-step coarsening: store, reset, fit, re-refine, remap, recover.

    ``points`` are the parametric contact points of the current state.
    Returns the new model and state; raises :class:`CoarseningError` and
    leaves the inputs untouched when the fit is singular.
    """
    # (1) store configuration and contact variables
    old_mesh, old_x = model.mesh, state.x.copy()
    stored = np.array(points, dtype=float).reshape(-1, 2)
    keys_old = old_mesh.index()
    # (2) reference mesh, (3) deformed coarse mesh
    coarse = base.copy()
    xc = fit_coarse(coarse, old_mesh, old_x, model)
    # (4) re-refine around the stored contact domain
    mesh, x, _ = refine(coarse, xc, stored, params)
    # (5) frictionless contact has no history; flags are recomputed by the caller
    # (6) recover control points of unchanged functions
    x = x.copy()
    kept = 0
    for i, k in enumerate(mesh.keys()):
        j = keys_old.get(k)
        if j is not None:
            x[i] = old_x[j]
            kept += 1
    log.info("coarsen: %d -> %d functions, %d recovered", old_mesh.n_functions, mesh.n_functions, kept)
    return model.with_mesh(mesh), SimState(x, state.pressure, state.step, state.v_target)


@dataclass
class Event:
    step: int
    kind: str
    elements_before: int
    elements_after: int
    dofs_before: int
    dofs_after: int
    f_n: float = 0.0
    f_t: float = 0.0
    extra: dict = field(default_factory=dict)
