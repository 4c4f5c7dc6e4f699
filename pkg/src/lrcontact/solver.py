"""Global assembly and Newton solution of the membrane-contact problem.

Unknowns are the control point positions plus, when a volume target is
set, the pressure ``p`` acting as its Lagrange multiplier. The residual is

    r = f_int - p dV_patch/dx - f_c,    c = V - V_target

where ``V = volume_factor * V_patch`` is the enclosed volume. The bordered
Newton system is solved in the reduced coordinates of the
boundary-condition map ``T``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .contact import ContactParams, ContactResult, RigidSphere, contact_force
from .membrane import DegenerateElementError, MembraneModel

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    pass


class LoadStepError(SolverError):
    """A load step failed after all step cuts; the input state is untouched."""


@dataclass
class SimState:
    """Deformed configuration (Cartesian control points in canonical order)."""
    x: np.ndarray
    pressure: float = 0.0
    step: int = 0
    v_target: float | None = None

    def copy(self) -> "SimState":
        return replace(self, x=self.x.copy())

    def homogeneous(self, weights) -> np.ndarray:
        w = np.asarray(weights)[:, None]
        return np.hstack([self.x * w, w])


@dataclass
class Assembly:
    residual: np.ndarray
    constraint: float | None
    K: sp.csr_matrix | None
    g: np.ndarray | None
    volume: float | None
    energy: float
    contact: ContactResult | None
    load: np.ndarray | None = None  # pressure load vector, dr/dp = -load


@dataclass
class SolveControls:
    tol_r: float = 1e-9  # times mu L^2
    tol_v: float = 1e-10  # relative
    max_iter: int = 30
    max_halvings: int = 8
    extra: dict = field(default_factory=dict)


def assemble(model: MembraneModel, state: SimState, sphere: RigidSphere | None = None,
             cparams: ContactParams | None = None, tangent: bool = True) -> Assembly:
    x = state.x
    energy, f, K = model.internal(x, tangent)
    r = f
    c = g = V = None
    if state.v_target is not None:
        # the patch carries 1/volume_factor of the enclosed surface
        V, g, H = model.volume(x, tangent)
        s = model.volume_factor
        r = r - state.pressure / s * g
        if tangent:
            K = K - state.pressure / s * H
        c = V - state.v_target
    cres = None
    if sphere is not None:
        cres = contact_force(model.disc, x, sphere, cparams, tangent)
        r = r - cres.force
        if tangent:
            K = K - cres.stiffness
    load = None if g is None else g / model.volume_factor
    return Assembly(r, c, K, g, V, energy, cres, load)


def _scales(model: MembraneModel, state: SimState, ctl: SolveControls):
    L = model.length_scale
    tol_r = ctl.tol_r * model.mu * L * L
    vref = max(abs(state.v_target or 0.0), L ** 3)
    return tol_r, ctl.tol_v * vref


def newton_solve(model: MembraneModel, state: SimState, sphere: RigidSphere | None = None,
                 cparams: ContactParams | None = None, controls: SolveControls | None = None):
    """Newton iteration to equilibrium from ``state``; returns (state, iterations).

    Raises :class:`ConvergenceError` without modifying ``state``.
    """
    ctl = controls or SolveControls()
    st = state.copy()
    T = model.reduction()
    tol_r, tol_v = _scales(model, st, ctl)
    has_v = st.v_target is not None
    for it in range(ctl.max_iter + 1):
        try:
            a = assemble(model, st, sphere, cparams, tangent=True)
        except DegenerateElementError as exc:
            raise ConvergenceError(str(exc)) from exc
        rr = T.T @ a.residual
        rn = float(np.linalg.norm(rr))
        cn = abs(a.constraint) if has_v else 0.0
        if not np.isfinite(rn):
            raise ConvergenceError("non-finite residual")
        log.debug("newton it=%d |r|=%.3e |c|=%.3e", it, rn, cn)
        if rn <= tol_r and cn <= tol_v:
            return st, it
        if it == ctl.max_iter:
            break
        Kr = (T.T @ a.K @ T).tocsc()
        if has_v:
            gr = T.T @ a.g
            lr = T.T @ a.load
            A = sp.bmat([[Kr, -lr[:, None]], [gr[None, :], None]], format="csc")
            rhs = -np.concatenate([rr, [a.constraint]])
        else:
            A, rhs = Kr, -rr
        with np.errstate(all="ignore"):
            try:
                sol = spla.spsolve(A, rhs)
            except RuntimeError as exc:
                raise ConvergenceError(f"singular tangent: {exc}") from exc
        if not np.all(np.isfinite(sol)):
            raise ConvergenceError("singular tangent")
        dq = sol[:T.shape[1]]
        st.x = st.x + (T @ dq).reshape(-1, 3)
        if has_v:
            st.pressure += float(sol[-1])
    raise ConvergenceError(f"no convergence in {ctl.max_iter} iterations (|r|={rn:.3e})")


def solve_load_step(model: MembraneModel, state: SimState, load, controls: SolveControls | None = None):
    """Advance from load parameter 0 to 1 with recursive step halving.

    ``load(s)`` returns ``(sphere, v_target)`` for ``s`` in [0, 1]; the
    sphere may be ``None``. Returns the converged state and total Newton
    iterations. On failure a :class:`LoadStepError` is raised and ``state``
    is left as it was.
    """
    ctl = controls or SolveControls()
    cparams = ctl.extra.get("contact")
    iters = 0

    def advance(st, s0, s1, level):
        nonlocal iters
        sphere, vt = load(s1)
        trial = st.copy()
        trial.v_target = vt
        try:
            out, k = newton_solve(model, trial, sphere, cparams, ctl)
            iters += k
            return out
        except ConvergenceError as exc:
            if level >= ctl.max_halvings:
                raise LoadStepError(f"load step failed after {level} halvings: {exc}") from exc
            log.info("step cut at s=%.4f (level %d): %s", s1, level + 1, exc)
            mid = 0.5 * (s0 + s1)
            return advance(advance(st, s0, mid, level + 1), mid, s1, level + 1)

    result = advance(state, 0.0, 1.0, 0)
    result.step = state.step + 1
    return result, iters
