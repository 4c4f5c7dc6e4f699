"""Vectorized numpy element kernels (reference implementation).

All kernels work on padded per-element arrays: ``conn`` is (E, m) with
padding slots pointing at function 0 and carrying zero basis values, and
the basis arrays ``N, N1, N2`` are (E, Q, m). Control points ``x`` are the
Cartesian (n, 3) positions. Element blocks are returned dense, with shapes
``fe (E, m, 3)`` and ``Ke (E, m, 3, m, 3)``.
"""
from __future__ import annotations

import numpy as np

_EZ = np.array([0.0, 0.0, 1.0])
_J = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def _tangents(conn, N1, N2, x):
    xe = x[conn]
    a1 = np.einsum("eqa,eai->eqi", N1, xe)
    a2 = np.einsum("eqa,eai->eqi", N2, xe)
    return xe, a1, a2


def membrane(conn, N1, N2, x, Ainv, dA, mu, tangent=True):
    """Incompressible Neo-Hookean membrane energy, forces and stiffness."""
    E, Q, m = N1.shape
    xe, a1, a2 = _tangents(conn, N1, N2, x)
    a = np.stack([a1, a2], axis=2)  # (E,Q,2,3)
    acov = np.einsum("eqai,eqbi->eqab", a, a)
    deta = acov[..., 0, 0] * acov[..., 1, 1] - acov[..., 0, 1] ** 2
    detA = 1.0 / (Ainv[..., 0, 0] * Ainv[..., 1, 1] - Ainv[..., 0, 1] ** 2)
    J2 = deta / detA
    if np.any(J2 <= 0.0):
        return np.nan, None, None
    ainv = np.empty_like(acov)
    ainv[..., 0, 0] = acov[..., 1, 1] / deta
    ainv[..., 1, 1] = acov[..., 0, 0] / deta
    ainv[..., 0, 1] = ainv[..., 1, 0] = -acov[..., 0, 1] / deta
    energy = 0.5 * mu * np.sum(dA * (np.einsum("eqab,eqab->eq", Ainv, acov) + 1.0 / J2 - 3.0))
    tau = mu * (Ainv - ainv / J2[..., None, None])
    dN = np.stack([N1, N2], axis=2)  # (E,Q,2,m)
    ta = np.einsum("eqab,eqbi->eqai", tau, a)
    fe = np.einsum("eq,eqaA,eqai->eAi", dA, dN, ta)
    if not tangent:
        return energy, fe, None
    Ke = np.zeros((E, m, 3, m, 3))
    eye = np.eye(3)
    n = np.cross(a1, a2)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    for q in range(Q):
        w = dA[:, q]
        d = dN[:, q]  # (E,2,m)
        geo = np.einsum("eaA,eab,ebB->eAB", d, tau[:, q], d) * w[:, None, None]
        g = np.einsum("eab,eaA,ebi->eAi", ainv[:, q], d, a[:, q])
        s = np.einsum("eaA,eab,ebB->eAB", d, ainv[:, q], d)
        P = eye - np.einsum("ei,ej->eij", n[:, q], n[:, q])
        c = (mu / J2[:, q] * w)[:, None, None, None, None]
        mat = 2.0 * np.einsum("eAi,eBj->eAiBj", g, g) + np.einsum("eBi,eAj->eAiBj", g, g) \
            + np.einsum("eAB,eij->eAiBj", s, P)
        Ke += c * mat + np.einsum("eAB,ij->eAiBj", geo, eye)
    return energy, fe, Ke


def volume(conn, N, N1, N2, wq, x, tangent=True):
    """Signed volume between the surface and the plane z = 0, gradient and Hessian.

    Uses ``V = integral of z (a1 x a2)_z`` over the parameter domain, which
    closes the region with vertical walls and the base plane.
    """
    E, Q, m = N.shape
    xe, a1, a2 = _tangents(conn, N1, N2, x)
    z = np.einsum("eqa,ea->eq", N, xe[..., 2])
    cz = a1[..., 0] * a2[..., 1] - a1[..., 1] * a2[..., 0]
    V = float(np.sum(wq * z * cz))
    # dcz/dx_A = N_A,1 (a2y, -a2x, 0) + N_A,2 (-a1y, a1x, 0)
    u2 = np.stack([a2[..., 1], -a2[..., 0], np.zeros_like(z)], axis=-1)
    u1 = np.stack([-a1[..., 1], a1[..., 0], np.zeros_like(z)], axis=-1)
    h = N1[..., None] * u2[:, :, None, :] + N2[..., None] * u1[:, :, None, :]  # (E,Q,m,3)
    ge = np.einsum("eq,eqAi->eAi", wq * z, h)
    ge[..., 2] += np.einsum("eq,eqA->eA", wq * cz, N)
    if not tangent:
        return V, ge, None
    He = np.einsum("eq,eqA,eqBj->eABj", wq, N, h)[:, :, None, :, :] * _EZ[None, None, :, None, None]
    He = He + np.transpose(He, (0, 3, 4, 1, 2))
    cross = np.einsum("eq,eqA,eqB->eAB", wq * z, N1, N2)
    He += np.einsum("eAB,ij->eAiBj", cross - np.transpose(cross, (0, 2, 1)), _J)
    return V, ge, He


def contact(conn, N, N1, N2, wq, x, center, radius, eps, tangent=True):
    """Rigid-sphere penalty forces at quadrature points.

    ``eps`` holds one penalty value per element. Returns ``(fe, Ke, gap)``
    with ``gap`` the (E, Q) signed gaps; ``fe`` is the force on the membrane.
    """
    E, Q, m = N.shape
    xe, a1, a2 = _tangents(conn, N1, N2, x)
    xq = np.einsum("eqa,eai->eqi", N, xe)
    d = xq - center
    r = np.linalg.norm(d, axis=-1)
    gap = r - radius
    nrm = d / r[..., None]
    c = np.cross(a1, a2)
    j = np.linalg.norm(c, axis=-1)
    act = gap < 0.0
    epsq = np.broadcast_to(eps[:, None], gap.shape)
    t = np.where(act[..., None], -(epsq * gap)[..., None] * nrm, 0.0)
    fe = np.einsum("eq,eqA,eqi->eAi", wq * j, N, t)
    if not tangent:
        return fe, None, gap
    Ke = np.zeros((E, m, 3, m, 3))
    if not act.any():
        return fe, Ke, gap
    mvec = c / j[..., None]
    nn = np.einsum("eqi,eqj->eqij", nrm, nrm)
    dt = -epsq[..., None, None] * (nn + (gap / r)[..., None, None] * (np.eye(3) - nn))
    dt = np.where(act[..., None, None], dt, 0.0)
    dj = N1[..., None] * np.cross(a2, mvec)[:, :, None, :] + N2[..., None] * np.cross(mvec, a1)[:, :, None, :]
    Ke += np.einsum("eq,eqA,eqij,eqB->eAiBj", wq * j, N, dt, N)
    Ke += np.einsum("eq,eqA,eqi,eqBj->eAiBj", wq, N, t, dj)
    return fe, Ke, gap
