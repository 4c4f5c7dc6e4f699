"""Incompressible Neo-Hookean membrane on LR NURBS surfaces.

The strain energy per unit reference area is
``W = mu/2 (A^{ab} a_ab + 1/J^2 - 3)`` with ``J^2 = det a / det A``.
Its stress ``tau^{ab} = mu (A^{ab} - a^{ab} / J^2)`` is per reference area;
the Cauchy components are ``sigma^{ab} = tau^{ab} / J``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .discretize import Discretization, discretize
from .lr.mesh import LRMesh

EDGES = ("xi0", "xi1", "eta0", "eta1")
_AXES = {"x": 0, "y": 1, "z": 2}


class DegenerateElementError(ArithmeticError):
    """Surface stretch J is not positive at some quadrature point."""


class ConfigurationError(ValueError):
    pass


@dataclass
class MetricData:
    a: np.ndarray  # (2, 3) covariant tangents
    a_cov: np.ndarray
    A_cov: np.ndarray
    a_con: np.ndarray
    A_con: np.ndarray
    J: float
    n: np.ndarray
    da: float  # current area per unit parameter area
    dA: float


def metrics(a1, a2, A1, A2, prestretch: float = 1.0) -> MetricData:
    """Metric quantities at one point from current and reference tangents.

    The reference metric is the pulled-back one divided by ``prestretch**2``.
    """
    a = np.array([a1, a2], dtype=float)
    A = np.array([A1, A2], dtype=float)
    a_cov = a @ a.T
    A_cov = A @ A.T / prestretch ** 2
    deta, detA = np.linalg.det(a_cov), np.linalg.det(A_cov)
    if not (deta > 0 and detA > 0):
        raise DegenerateElementError("degenerate metric")
    c = np.cross(a[0], a[1])
    return MetricData(a, a_cov, A_cov, np.linalg.inv(a_cov), np.linalg.inv(A_cov),
                      float(np.sqrt(deta / detA)), c / np.linalg.norm(c), float(np.sqrt(deta)),
                      float(np.sqrt(detA)))


def membrane_stress(m: MetricData, mu: float) -> np.ndarray:
    """Contravariant Cauchy stress components ``mu/J (A^{ab} - a^{ab}/J^2)``."""
    return mu / m.J * (m.A_con - m.a_con / m.J ** 2)


# ----------------------------------------------------------------- constraints
@dataclass(frozen=True)
class BoundaryCondition:
    """Constraint on the control points of one boundary row.

    ``fix`` freezes the listed components (e.g. ``"xy"``) at their current
    values; ``tie`` makes the listed components move together along the row.
    """
    edge: str
    fix: str = ""
    tie: str = ""

    def __post_init__(self):
        if self.edge not in EDGES:
            raise ConfigurationError(f"unknown edge {self.edge!r}")
        if set(self.fix + self.tie) - set(_AXES):
            raise ConfigurationError(f"bad components in {self}")


def edge_functions(mesh: LRMesh, edge: str) -> np.ndarray:
    """Canonical indices of the functions that are nonzero on a domain edge."""
    u0, u1, v0, v1 = mesh.domain
    out = []
    for i, k in enumerate(mesh.keys()):
        kx, ky = k
        if edge == "xi0":
            hit = kx[mesh.p] == u0
        elif edge == "xi1":
            hit = kx[1] == u1
        elif edge == "eta0":
            hit = ky[mesh.q] == v0
        else:
            hit = ky[1] == v1
        if hit:
            out.append(i)
    return np.array(out, dtype=np.int64)


def reduction_map(mesh: LRMesh, bcs) -> sp.csr_matrix:
    """Sparse map T from free unknowns to full dofs (``du = T dq``)."""
    n = mesh.n_functions
    col = np.arange(3 * n)
    for bc in bcs:
        fns = edge_functions(mesh, bc.edge)
        for c in bc.tie:
            d = 3 * fns + _AXES[c]
            col[d] = col[d].min()
    for bc in bcs:
        fns = edge_functions(mesh, bc.edge)
        for c in bc.fix:
            col[3 * fns + _AXES[c]] = -1
    keep = col >= 0
    _, cols = np.unique(col[keep], return_inverse=True)
    rows = np.flatnonzero(keep)
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(3 * n, cols.max() + 1 if cols.size else 0))


# ---------------------------------------------------------------------- model
@dataclass
class MembraneModel:
    """Membrane problem on a mesh.

    Parameters
    ----------
    mesh : LRMesh
        Reference geometry (its control points define the reference state).
    mu : float
        Shear modulus.
    nq : int
        Gauss points per direction.
    prestretch : float
        Isotropic pre-stretch of the reference geometry.
    bcs : sequence of BoundaryCondition
    volume_factor : float or None
        Multiplier turning the integrated patch volume into the enclosed
        volume (4 for an octant standing in for a hemisphere). ``None``
        disables the volume constraint.
    """
    mesh: LRMesh
    mu: float = 1.0
    nq: int = 5
    prestretch: float = 1.0
    bcs: tuple = ()
    volume_factor: float | None = None
    length_scale: float = 1.0
    _ref: dict = field(default_factory=dict, repr=False)

    def with_mesh(self, mesh: LRMesh) -> "MembraneModel":
        return MembraneModel(mesh, self.mu, self.nq, self.prestretch, tuple(self.bcs),
                             self.volume_factor, self.length_scale)

    @property
    def disc(self) -> Discretization:
        return discretize(self.mesh, self.nq)

    def reference_x(self) -> np.ndarray:
        cp = self.mesh.cp_array()
        return cp[:, :3] / cp[:, 3:4]

    def reference(self):
        """Contravariant reference metric (E, Q, 2, 2) and area weights (E, Q)."""
        key = self.mesh.version, id(self.disc)
        if self._ref.get("key") != key:
            d = self.disc
            _, A1, A2 = d.positions(self.reference_x())
            lam2 = self.prestretch ** 2
            g11 = np.einsum("eqi,eqi->eq", A1, A1) / lam2
            g12 = np.einsum("eqi,eqi->eq", A1, A2) / lam2
            g22 = np.einsum("eqi,eqi->eq", A2, A2) / lam2
            det = g11 * g22 - g12 ** 2
            if np.any(det <= 0):
                raise DegenerateElementError("degenerate reference metric")
            Ainv = np.empty(det.shape + (2, 2))
            Ainv[..., 0, 0] = g22 / det
            Ainv[..., 1, 1] = g11 / det
            Ainv[..., 0, 1] = Ainv[..., 1, 0] = -g12 / det
            self._ref = {"key": key, "Ainv": Ainv, "dA": np.sqrt(det) * d.wq}
        return self._ref["Ainv"], self._ref["dA"]

    def reduction(self) -> sp.csr_matrix:
        key = ("T", tuple(self.bcs))
        if key not in self.mesh._cache:
            self.mesh._cache[key] = reduction_map(self.mesh, self.bcs)
        return self.mesh._cache[key]

    # ------------------------------------------------------------ physics
    def internal(self, x, tangent=True):
        """Energy, internal force (3n) and stiffness (csr) at positions ``x``."""
        d = self.disc
        Ainv, dA = self.reference()
        energy, fe, Ke = kernels.membrane(d.conn, d.N1, d.N2, np.ascontiguousarray(x), Ainv, dA,
                                          self.mu, tangent)
        if fe is None:
            raise DegenerateElementError("non-positive surface stretch")
        f = d.scatter_vector(fe)
        return energy, f, (d.scatter_matrix(Ke) if tangent else None)

    def element_internal_force(self, element: int, x) -> np.ndarray:
        """Force vector (m_e, 3) of a single element."""
        d = self.disc
        Ainv, dA = self.reference()
        sl = slice(element, element + 1)
        _, fe, _ = kernels.membrane(d.conn[sl], d.N1[sl], d.N2[sl], np.ascontiguousarray(x),
                                    Ainv[sl], dA[sl], self.mu, False)
        if fe is None:
            raise DegenerateElementError("non-positive surface stretch")
        return fe[0, d.mask[element]]

    def volume(self, x, tangent=True):
        """Enclosed volume, its gradient (3n) and Hessian (csr)."""
        if self.volume_factor is None:
            raise ConfigurationError("volume requested but no closure declared")
        d = self.disc
        V, ge, He = kernels.volume(d.conn, d.N, d.N1, d.N2, d.wq, np.ascontiguousarray(x), tangent)
        s = self.volume_factor
        g = s * d.scatter_vector(ge)
        return s * V, g, (s * d.scatter_matrix(He) if tangent else None)


def enclosed_volume(model: MembraneModel, x):
    """Volume and its shape derivative with respect to control points."""
    V, g, _ = model.volume(x, tangent=False)
    return V, g
