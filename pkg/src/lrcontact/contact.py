"""Frictionless penalty contact against a rigid sphere.

Contact is checked at the membrane's quadrature points. The traction on
the membrane is ``t = -eps g n_p`` where the gap ``g`` is negative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .discretize import Discretization


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class RigidSphere:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def moved(self, center) -> "RigidSphere":
        return RigidSphere(tuple(center), self.radius)


@dataclass(frozen=True)
class ContactParams:
    """Base penalty, degree and base element lengths (parametric units)."""
    eps0: float
    degree: int
    l0x: float = 1.0
    l0y: float = 1.0

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("base penalty must be positive")


def sphere_gap(x, sphere: RigidSphere):
    """Signed gap, outward sphere normal at the projection, and projection point."""
    c = np.asarray(sphere.center)
    d = np.asarray(x, dtype=float) - c
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise ProjectionError("point coincides with the sphere center")
    n = d / r
    return r - sphere.radius, n, c + sphere.radius * n


def element_penalty(params: ContactParams, lx: float, ly: float) -> float:
    """``eps0 (l0x l0y / (lx ly))**(p - 1)``."""
    return params.eps0 * (params.l0x * params.l0y / (lx * ly)) ** (params.degree - 1)


def element_penalties(disc: Discretization, params: ContactParams) -> np.ndarray:
    b = disc.boxes
    return element_penalty(params, b[:, 1] - b[:, 0], b[:, 3] - b[:, 2])


@dataclass
class ContactResult:
    force: np.ndarray  # (3n,) force on the membrane
    stiffness: object  # csr derivative of ``force`` or None
    gap: np.ndarray  # (E, Q)

    @property
    def active(self) -> np.ndarray:
        return self.gap < 0.0

    def total(self) -> np.ndarray:
        """Net force on the membrane."""
        return self.force.reshape(-1, 3).sum(axis=0)


def contact_force(disc: Discretization, x, sphere: RigidSphere, params: ContactParams,
                  tangent: bool = True) -> ContactResult:
    eps = element_penalties(disc, params)
    fe, Ke, gap = kernels.contact(disc.conn, disc.N, disc.N1, disc.N2, disc.wq,
                                  np.ascontiguousarray(x), np.asarray(sphere.center), sphere.radius,
                                  eps, tangent)
    K = disc.scatter_matrix(Ke) if tangent else None
    return ContactResult(disc.scatter_vector(fe), K, gap)


def element_contact_force(disc: Discretization, element: int, x, sphere: RigidSphere,
                          params: ContactParams):
    """Force (m_e, 3) and active flags (Q,) of one element."""
    sl = slice(element, element + 1)
    eps = element_penalties(disc, params)[sl]
    fe, _, gap = kernels.contact(disc.conn[sl], disc.N[sl], disc.N1[sl], disc.N2[sl], disc.wq[sl],
                                 np.ascontiguousarray(x), np.asarray(sphere.center), sphere.radius,
                                 eps, False)
    return fe[0, disc.mask[element]], gap[0] < 0.0
