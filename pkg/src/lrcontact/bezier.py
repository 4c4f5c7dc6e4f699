"""Bezier extraction for LR NURBS.

Each function supported on an element is written as ``N = c . B`` with the
Bernstein polynomials ``B`` of the element. Per direction the row ``c`` is
found by opening the local knot vector, decomposing it into Bezier segments
by knot insertion, and, when the function's knot span is wider than the
element, remapping the segment row onto the element sub-span.
"""
from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lr.knots import KNOT_TOL
from .lr.mesh import LRMesh


class SpanError(ValueError):
    pass


def bernstein(p: int, t):
    """Bernstein polynomials of degree ``p`` on [0, 1] and their t-derivatives.

    Returns arrays of shape ``t.shape + (p + 1,)``.
    """
    t = np.asarray(t, dtype=float)
    b = np.zeros(t.shape + (p + 1,))
    b[..., 0] = 1.0
    db = np.zeros_like(b)
    for k in range(1, p + 1):
        if k == p:
            db[..., 0] = -p * b[..., 0]
            for i in range(1, p):
                db[..., i] = p * (b[..., i - 1] - b[..., i])
            db[..., p] = p * b[..., p - 1]
        prev = b[..., :k].copy()
        b[..., 0] = (1 - t) * prev[..., 0]
        for i in range(1, k):
            b[..., i] = (1 - t) * prev[..., i] + t * prev[..., i - 1]
        b[..., k] = t * prev[..., k - 1]
    return b, db


def open_extend(knots) -> tuple[list[float], int]:
    """Pad a local knot vector so both end knots have multiplicity ``p + 1``.

    Returns the extended vector and the index of the original function in it.
    """
    kv = [float(k) for k in knots]
    p = len(kv) - 2
    first = sum(1 for k in kv if k == kv[0])
    last = sum(1 for k in kv if k == kv[-1])
    left = p + 1 - first
    right = p + 1 - last
    return [kv[0]] * left + kv + [kv[-1]] * right, left


def _insert_knot(U: list[float], coef: np.ndarray, p: int, x: float):
    """Boehm insertion of one knot into a spline with coefficient vector ``coef``."""
    k = max(i for i in range(len(U) - 1) if U[i] <= x < U[i + 1]) if x < U[-1] else len(U) - p - 2
    new = np.zeros(coef.size + 1)
    for i in range(new.size):
        if i <= k - p:
            new[i] = coef[i]
        elif i <= k:
            a = (x - U[i]) / (U[i + p] - U[i])
            new[i] = a * coef[i] + (1 - a) * coef[i - 1]
        else:
            new[i] = coef[i - 1]
    return U[: k + 1] + [x] + U[k + 1:], new


@lru_cache(maxsize=None)
def _bezier_segments(knots: tuple) -> tuple[tuple[float, ...], np.ndarray]:
    """Distinct knots of the opened vector and Bezier coefficients of the target function."""
    U, target = open_extend(knots)
    p = len(knots) - 2
    coef = np.zeros(len(U) - p - 1)
    coef[target] = 1.0
    distinct = sorted(set(U))
    for x in distinct[1:-1]:
        while sum(1 for u in U if u == x) < p:
            U, coef = _insert_knot(U, coef, p, x)
    coef.setflags(write=False)
    return tuple(distinct), coef


def extraction_row(knots, bezier_span) -> np.ndarray:
    """Bernstein coefficients of the function over one of its knot spans."""
    kv = tuple(float(k) for k in knots)
    p = len(kv) - 2
    a, b = bezier_span
    distinct, coef = _bezier_segments(kv)
    for j, (lo, hi) in enumerate(zip(distinct, distinct[1:])):
        if abs(lo - a) <= KNOT_TOL and abs(hi - b) <= KNOT_TOL:
            return coef[j * p: j * p + p + 1].copy()
    raise SpanError(f"[{a}, {b}] is not a knot span of {kv}")


def _chebyshev(n: int) -> np.ndarray:
    k = np.arange(n)
    return 0.5 * (1 - np.cos((2 * k + 1) * np.pi / (2 * n)))


@lru_cache(maxsize=None)
def _remap_matrix(p: int, lo: float, hi: float) -> np.ndarray:
    """T with c_element = c_span @ T for the sub-span [lo, hi] of [0, 1]."""
    s = _chebyshev(p + 1)
    on_sub, _ = bernstein(p, s)
    on_span, _ = bernstein(p, lo + (hi - lo) * s)
    T = np.linalg.solve(on_sub, on_span).T
    T.setflags(write=False)
    return T


def remap_row(coeffs, bezier_span, element_span) -> np.ndarray:
    """Re-express a Bernstein row given on ``bezier_span`` over ``element_span``."""
    c = np.asarray(coeffs, dtype=float)
    a, b = bezier_span
    lo, hi = element_span
    if not hi > lo or lo < a - KNOT_TOL or hi > b + KNOT_TOL:
        raise SpanError(f"[{lo}, {hi}] is not a sub-span of [{a}, {b}]")
    if abs(lo - a) <= KNOT_TOL and abs(hi - b) <= KNOT_TOL:
        return c.copy()
    p = c.size - 1
    return c @ _remap_matrix(p, (lo - a) / (b - a), (hi - a) / (b - a))


def _span_containing(knots, lo: float, hi: float) -> tuple[float, float]:
    for a, b in zip(knots, knots[1:]):
        if b > a and a <= lo + KNOT_TOL and hi <= b + KNOT_TOL:
            return a, b
    raise SpanError(f"element span [{lo}, {hi}] not inside one knot span of {knots}")


@lru_cache(maxsize=None)
def element_row(knots: tuple, lo: float, hi: float) -> np.ndarray:
    """Extraction row of a local function over the element interval [lo, hi]."""
    span = _span_containing(knots, lo, hi)
    row = remap_row(extraction_row(knots, span), span, (lo, hi))
    row.setflags(write=False)
    return row


@dataclass
class ElementOperator:
    element: int
    box: tuple
    functions: np.ndarray  # canonical indices
    gammas: np.ndarray
    rows_xi: np.ndarray  # (n_e, p+1)
    rows_eta: np.ndarray  # (n_e, q+1)

    @property
    def C(self) -> np.ndarray:
        """Tensor-product extraction rows, (n_e, (p+1)(q+1)), xi index major."""
        return np.einsum("ai,aj->aij", self.rows_xi, self.rows_eta).reshape(len(self.functions), -1)

    def basis(self, t, s):
        """Unscaled B-spline values and parametric derivatives at local points.

        ``t``, ``s`` are local coordinates in [0, 1]; returns arrays of shape
        (n_e, npts) for values and xi / eta derivatives.
        """
        bx, dbx = bernstein(self.rows_xi.shape[1] - 1, t)
        by, dby = bernstein(self.rows_eta.shape[1] - 1, s)
        u0, u1, v0, v1 = self.box
        nx, ny = self.rows_xi @ bx.T, self.rows_eta @ by.T
        dnx = self.rows_xi @ dbx.T / (u1 - u0)
        dny = self.rows_eta @ dby.T / (v1 - v0)
        return nx * ny, dnx * ny, nx * dny


_op_lock = threading.Lock()


def element_operator(mesh: LRMesh, element: int) -> ElementOperator:
    """Cached extraction operator of one element."""
    cache = mesh._cache.setdefault("operators", {})
    op = cache.get(element)
    if op is not None:
        return op
    box = mesh.elements[element]
    u0, u1, v0, v1 = box
    idx = mesh.element_functions(box)
    keys = mesh.keys()
    rx = np.array([element_row(keys[i][0], u0, u1) for i in idx])
    ry = np.array([element_row(keys[i][1], v0, v1) for i in idx])
    gam = np.array([mesh.functions[keys[i]].gamma for i in idx])
    op = ElementOperator(element, box, idx, gam, rx, ry)
    with _op_lock:
        cache.setdefault(element, op)
    return cache[element]


def dump_operators_csv(mesh: LRMesh, path) -> None:
    """One row per (element, function) with the tensor extraction coefficients."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        k = (mesh.p + 1) * (mesh.q + 1)
        w.writerow(["element", "function"] + [f"c{i}" for i in range(k)])
        for e in range(len(mesh.elements)):
            op = element_operator(mesh, e)
            for fid, row in zip(op.functions, op.C):
                w.writerow([e, int(fid)] + [repr(float(v)) for v in row])

