"""Loop-based element kernels compiled with numba.

Same signatures and array conventions as :mod:`lrcontact.kernels._numpy`.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _tangents(conn, N1, N2, x, e, q):
    a1 = np.zeros(3)
    a2 = np.zeros(3)
    for A in range(conn.shape[1]):
        c = conn[e, A]
        for i in range(3):
            a1[i] += N1[e, q, A] * x[c, i]
            a2[i] += N2[e, q, A] * x[c, i]
    return a1, a2


@njit(cache=True)
def _cross(u, v):
    return np.array([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]])


@njit(cache=True)
def _membrane(conn, N1, N2, x, Ainv, dA, mu, tangent):
    E, Q, m = N1.shape
    fe = np.zeros((E, m, 3))
    Ke = np.zeros((E, m, 3, m, 3)) if tangent else np.zeros((0, m, 3, m, 3))
    energy = 0.0
    a = np.zeros((2, 3))
    tau = np.zeros((2, 2))
    ai = np.zeros((2, 2))
    g = np.zeros((m, 3))
    ta = np.zeros((2, 3))
    for e in range(E):
        for q in range(Q):
            a1, a2 = _tangents(conn, N1, N2, x, e, q)
            a[0] = a1
            a[1] = a2
            a11 = a1 @ a1
            a12 = a1 @ a2
            a22 = a2 @ a2
            deta = a11 * a22 - a12 * a12
            B = Ainv[e, q]
            detA = 1.0 / (B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0])
            J2 = deta / detA
            if J2 <= 0.0:
                return np.nan, fe, Ke, False
            ai[0, 0] = a22 / deta
            ai[1, 1] = a11 / deta
            ai[0, 1] = -a12 / deta
            ai[1, 0] = -a12 / deta
            w = dA[e, q]
            energy += 0.5 * mu * w * (B[0, 0] * a11 + 2.0 * B[0, 1] * a12 + B[1, 1] * a22 + 1.0 / J2 - 3.0)
            for al in range(2):
                for be in range(2):
                    tau[al, be] = mu * (B[al, be] - ai[al, be] / J2)
            for al in range(2):
                for i in range(3):
                    ta[al, i] = tau[al, 0] * a[0, i] + tau[al, 1] * a[1, i]
            for A in range(m):
                d1 = N1[e, q, A]
                d2 = N2[e, q, A]
                for i in range(3):
                    fe[e, A, i] += w * (d1 * ta[0, i] + d2 * ta[1, i])
            if not tangent:
                continue
            n = _cross(a1, a2)
            n /= np.sqrt(n @ n)
            c = mu / J2 * w
            for A in range(m):
                dA1 = N1[e, q, A]
                dA2 = N2[e, q, A]
                for i in range(3):
                    g[A, i] = (ai[0, 0] * dA1 + ai[1, 0] * dA2) * a1[i] + (ai[0, 1] * dA1 + ai[1, 1] * dA2) * a2[i]
            for A in range(m):
                dA1 = N1[e, q, A]
                dA2 = N2[e, q, A]
                if dA1 == 0.0 and dA2 == 0.0:
                    continue
                for Bf in range(m):
                    dB1 = N1[e, q, Bf]
                    dB2 = N2[e, q, Bf]
                    geo = w * (dA1 * (tau[0, 0] * dB1 + tau[0, 1] * dB2) + dA2 * (tau[1, 0] * dB1 + tau[1, 1] * dB2))
                    s = dA1 * (ai[0, 0] * dB1 + ai[0, 1] * dB2) + dA2 * (ai[1, 0] * dB1 + ai[1, 1] * dB2)
                    for i in range(3):
                        for j in range(3):
                            P = (1.0 if i == j else 0.0) - n[i] * n[j]
                            v = c * (2.0 * g[A, i] * g[Bf, j] + g[Bf, i] * g[A, j] + s * P)
                            if i == j:
                                v += geo
                            Ke[e, A, i, Bf, j] += v
    return energy, fe, Ke, True


def membrane(conn, N1, N2, x, Ainv, dA, mu, tangent=True):
    energy, fe, Ke, ok = _membrane(conn, N1, N2, x, Ainv, dA, float(mu), tangent)
    if not ok:
        return np.nan, None, None
    return energy, fe, (Ke if tangent else None)


@njit(cache=True)
def _volume(conn, N, N1, N2, wq, x, tangent):
    E, Q, m = N.shape
    ge = np.zeros((E, m, 3))
    He = np.zeros((E, m, 3, m, 3)) if tangent else np.zeros((0, m, 3, m, 3))
    V = 0.0
    h = np.zeros((m, 3))
    for e in range(E):
        for q in range(Q):
            a1, a2 = _tangents(conn, N1, N2, x, e, q)
            z = 0.0
            for A in range(m):
                z += N[e, q, A] * x[conn[e, A], 2]
            cz = a1[0] * a2[1] - a1[1] * a2[0]
            w = wq[e, q]
            V += w * z * cz
            for A in range(m):
                h[A, 0] = N1[e, q, A] * a2[1] - N2[e, q, A] * a1[1]
                h[A, 1] = -N1[e, q, A] * a2[0] + N2[e, q, A] * a1[0]
                h[A, 2] = 0.0
                for i in range(3):
                    ge[e, A, i] += w * z * h[A, i]
                ge[e, A, 2] += w * cz * N[e, q, A]
            if not tangent:
                continue
            for A in range(m):
                for Bf in range(m):
                    for j in range(3):
                        He[e, A, 2, Bf, j] += w * N[e, q, A] * h[Bf, j]
                        He[e, Bf, j, A, 2] += w * N[e, q, A] * h[Bf, j]
                    s = w * z * (N1[e, q, A] * N2[e, q, Bf] - N2[e, q, A] * N1[e, q, Bf])
                    He[e, A, 0, Bf, 1] += s
                    He[e, A, 1, Bf, 0] -= s
    return V, ge, He


def volume(conn, N, N1, N2, wq, x, tangent=True):
    V, ge, He = _volume(conn, N, N1, N2, wq, x, tangent)
    return V, ge, (He if tangent else None)


@njit(cache=True)
def _contact(conn, N, N1, N2, wq, x, center, radius, eps, tangent):
    E, Q, m = N.shape
    fe = np.zeros((E, m, 3))
    Ke = np.zeros((E, m, 3, m, 3)) if tangent else np.zeros((0, m, 3, m, 3))
    gap = np.zeros((E, Q))
    xq = np.zeros(3)
    dt = np.zeros((3, 3))
    dj = np.zeros((m, 3))
    for e in range(E):
        for q in range(Q):
            xq[:] = 0.0
            for A in range(m):
                for i in range(3):
                    xq[i] += N[e, q, A] * x[conn[e, A], i]
            d = xq - center
            r = np.sqrt(d @ d)
            gq = r - radius
            gap[e, q] = gq
            if gq >= 0.0:
                continue
            a1, a2 = _tangents(conn, N1, N2, x, e, q)
            c = _cross(a1, a2)
            j = np.sqrt(c @ c)
            nrm = d / r
            t = -eps[e] * gq * nrm
            w = wq[e, q]
            for A in range(m):
                for i in range(3):
                    fe[e, A, i] += w * j * N[e, q, A] * t[i]
            if not tangent:
                continue
            mv = c / j
            u2 = _cross(a2, mv)
            u1 = _cross(mv, a1)
            for i in range(3):
                for k in range(3):
                    nn = nrm[i] * nrm[k]
                    dt[i, k] = -eps[e] * (nn + gq / r * ((1.0 if i == k else 0.0) - nn))
            for A in range(m):
                for i in range(3):
                    dj[A, i] = N1[e, q, A] * u2[i] + N2[e, q, A] * u1[i]
            for A in range(m):
                NA = N[e, q, A]
                if NA == 0.0:
                    continue
                for Bf in range(m):
                    NB = N[e, q, Bf]
                    for i in range(3):
                        for k in range(3):
                            Ke[e, A, i, Bf, k] += w * NA * (j * dt[i, k] * NB + t[i] * dj[Bf, k])
    return fe, Ke, gap


def contact(conn, N, N1, N2, wq, x, center, radius, eps, tangent=True):
    fe, Ke, gap = _contact(conn, N, N1, N2, wq, x, np.asarray(center, dtype=float), float(radius),
                           np.asarray(eps, dtype=float), tangent)
    return fe, (Ke if tangent else None), gap
