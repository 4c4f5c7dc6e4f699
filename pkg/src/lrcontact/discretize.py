"""Padded per-element arrays of the rational basis at Gauss points.

Weights are shared by the reference and current configurations, so the
rational basis ``R_A = gamma_A B_A w_A / W`` and its parametric derivatives
are fixed for a mesh and can be tabulated once. Positions are then plain
linear combinations of Cartesian control points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bezier import element_operator
from .lr.mesh import GeometryError, LRMesh


def gauss_rule(n: int):
    """Gauss-Legendre points and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass
class Discretization:
    mesh: LRMesh
    nq: int
    conn: np.ndarray  # (E, m) canonical function indices, padded with 0
    mask: np.ndarray  # (E, m) True for real entries
    N: np.ndarray  # (E, Q, m)
    N1: np.ndarray
    N2: np.ndarray
    wq: np.ndarray  # (E, Q) Gauss weight times parametric element area
    points: np.ndarray  # (E, Q, 2) parametric coordinates of quadrature points
    boxes: np.ndarray  # (E, 4)
    weights: np.ndarray  # (n,)

    @property
    def n_functions(self) -> int:
        return self.weights.size

    @property
    def ndof(self) -> int:
        return 3 * self.n_functions

    def positions(self, x):
        """Surface points and tangents at all quadrature points."""
        xe = x[self.conn]
        return (np.einsum("eqa,eai->eqi", self.N, xe),
                np.einsum("eqa,eai->eqi", self.N1, xe),
                np.einsum("eqa,eai->eqi", self.N2, xe))

    # ---------------------------------------------------------- scattering
    def _edofs(self):
        e = 3 * self.conn[:, :, None] + np.arange(3)
        return e.reshape(len(self.conn), -1)

    def scatter_vector(self, fe) -> np.ndarray:
        out = np.zeros(self.ndof)
        ed = self._edofs()
        m3 = np.repeat(self.mask, 3, axis=1)
        np.add.at(out, ed[m3], fe.reshape(ed.shape)[m3])
        return out

    def scatter_matrix(self, Ke) -> sp.csr_matrix:
        E = len(self.conn)
        ed = self._edofs()
        k = ed.shape[1]
        m3 = np.repeat(self.mask, 3, axis=1)
        keep = (m3[:, :, None] & m3[:, None, :]).ravel()
        rows = np.broadcast_to(ed[:, :, None], (E, k, k)).ravel()[keep]
        cols = np.broadcast_to(ed[:, None, :], (E, k, k)).ravel()[keep]
        vals = Ke.reshape(E, k, k).ravel()[keep]
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.ndof, self.ndof))


def discretize(mesh: LRMesh, nq: int) -> Discretization:
    """Tabulate the rational basis on an ``nq x nq`` Gauss rule per element (cached)."""
    key = ("disc", nq)
    if key in mesh._cache:
        return mesh._cache[key]
    t, wt = gauss_rule(nq)
    tt, ss = (a.ravel() for a in np.meshgrid(t, t, indexing="ij"))
    ww = np.outer(wt, wt).ravel()
    E, Q = len(mesh.elements), tt.size
    w = mesh.cp_array()[:, 3]
    ops = [element_operator(mesh, e) for e in range(E)]
    m = max(len(op.functions) for op in ops)
    conn = np.zeros((E, m), dtype=np.int64)
    mask = np.zeros((E, m), dtype=bool)
    N, N1, N2 = (np.zeros((E, Q, m)) for _ in range(3))
    wq = np.empty((E, Q))
    pts = np.empty((E, Q, 2))
    boxes = np.array(mesh.elements, dtype=float)
    for e, op in enumerate(ops):
        k = len(op.functions)
        conn[e, :k] = op.functions
        mask[e, :k] = True
        b, bx, by = op.basis(tt, ss)
        g = (op.gammas * w[op.functions])[:, None]
        b, bx, by = g * b, g * bx, g * by
        W, Wx, Wy = b.sum(0), bx.sum(0), by.sum(0)
        if np.any(W <= 0):
            raise GeometryError(f"weight function vanishes on element {e}")
        R = b / W
        N[e, :, :k] = R.T
        N1[e, :, :k] = ((bx - R * Wx) / W).T
        N2[e, :, :k] = ((by - R * Wy) / W).T
        u0, u1, v0, v1 = op.box
        wq[e] = ww * (u1 - u0) * (v1 - v0)
        pts[e, :, 0] = u0 + (u1 - u0) * tt
        pts[e, :, 1] = v0 + (v1 - v0) * ss
    disc = Discretization(mesh, nq, conn, mask, N, N1, N2, wq, pts, boxes, w)
    mesh._cache[key] = disc
    return disc
