"""Standard starting geometries and global refinement helpers."""
from __future__ import annotations

import numpy as np

from .mesh import HORIZONTAL, VERTICAL, LRMesh, Meshline, to_projective

SQRT1_2 = np.sqrt(0.5)


def open_uniform_knots(n_elements: int, degree: int, start: float = 0.0, end: float | None = None):
    """Open knot vector with ``n_elements`` equal spans on [start, end] (default end = n_elements)."""
    end = float(n_elements) if end is None else float(end)
    inner = np.linspace(start, end, n_elements + 1)
    return [start] * degree + list(inner) + [end] * degree


def flat_sheet(width: float, height: float, nx: int, ny: int, p: int, q: int | None = None,
               origin=(0.0, 0.0)) -> LRMesh:
    """Flat rectangular sheet in the plane z = 0.

    Parameter space is [0, nx] x [0, ny] so one base element has unit width.
    Control points sit at Greville abscissae, giving a linear (uniform) map.
    """
    q = p if q is None else q
    kx = open_uniform_knots(nx, p)
    ky = open_uniform_knots(ny, q)
    gx = np.array([np.mean(kx[i + 1:i + p + 1]) for i in range(len(kx) - p - 1)])
    gy = np.array([np.mean(ky[j + 1:j + q + 1]) for j in range(len(ky) - q - 1)])
    X, Y = np.meshgrid(origin[0] + gx / nx * width, origin[1] + gy / ny * height, indexing="ij")
    pts = np.stack([X, Y, np.zeros_like(X)], axis=-1)
    cp = to_projective(pts, np.ones(X.shape))
    return LRMesh.tensor(kx, ky, p, q, cp)


def sphere_octant(radius: float = 1.0) -> LRMesh:
    """Biquadratic rational patch covering the octant x, y, z >= 0 of a sphere.

    ``xi`` runs along the equator from the x axis to the y axis, ``eta`` from
    the equator to the pole, where the top row of control points collapses.
    """
    circ = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    wc = np.array([1.0, SQRT1_2, 1.0])
    # meridian quarter circle in (r, z)
    mer = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    wm = np.array([1.0, SQRT1_2, 1.0])
    pts = np.zeros((3, 3, 3))
    w = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            r, z = mer[j]
            pts[i, j] = radius * np.array([circ[i, 0] * r, circ[i, 1] * r, z])
            w[i, j] = wc[i] * wm[j]
    kv = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
    return LRMesh.tensor(kv, kv, 2, 2, to_projective(pts, w))


def uniform_refine(mesh: LRMesh, levels: int = 1) -> LRMesh:
    """Bisect every element ``levels`` times with full-length meshlines (in place)."""
    u0, u1, v0, v1 = mesh.domain
    for _ in range(levels):
        xs = sorted({0.5 * (a + b) for a, b, _, _ in mesh.elements})
        ys = sorted({0.5 * (c + d) for _, _, c, d in mesh.elements})
        for x in xs:
            mesh.insert(Meshline(VERTICAL, x, v0, v1))
        for y in ys:
            mesh.insert(Meshline(HORIZONTAL, y, u0, u1))
    return mesh


def subdivide(mesh: LRMesh, nx: int, ny: int) -> LRMesh:
    """Insert full-length lines so the (single-span) patch gets nx x ny elements."""
    u0, u1, v0, v1 = mesh.domain
    for i in range(1, nx):
        mesh.insert(Meshline(VERTICAL, u0 + (u1 - u0) * i / nx, v0, v1))
    for j in range(1, ny):
        mesh.insert(Meshline(HORIZONTAL, v0 + (v1 - v0) * j / ny, u0, u1))
    return mesh
