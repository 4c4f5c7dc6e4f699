"""Locally refined (LR) NURBS meshes.

Functions are stored with homogeneous control points ``(x w, y w, z w, w)``
and a scaling factor ``gamma``. The surface is

    x(xi, eta) = sum_i gamma_i B_i cp_hom_i[:3] / sum_i gamma_i B_i cp_hom_i[3]

Refinement happens by inserting meshlines. Every function whose support is
fully traversed by a meshline is split by knot insertion, children are merged
with existing identical functions, and the check is repeated until every
function has minimal support again. Optional auxiliary homogeneous layers
(``LRFunction.aux``) go through exactly the same updates, which is how the
solver carries deformed control points across refinements.
"""
from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .knots import KNOT_TOL, eval_basis_1d, greville, multiplicity, split_knots

VERTICAL = "vertical"  # constant xi, extends along eta
HORIZONTAL = "horizontal"  # constant eta, extends along xi


class MeshError(ValueError):
    pass


class PrimitivityError(MeshError):
    pass


class AlignmentError(MeshError):
    pass


class GeometryError(MeshError):
    pass


@dataclass(frozen=True)
class Meshline:
    direction: str
    fixed: float
    start: float
    end: float
    multiplicity: int = 1

    def __post_init__(self):
        if self.direction not in (VERTICAL, HORIZONTAL):
            raise MeshError(f"unknown meshline direction {self.direction!r}")
        if not self.start < self.end:
            raise MeshError(f"empty meshline span [{self.start}, {self.end}]")
        if self.multiplicity < 1:
            raise MeshError("meshline multiplicity must be positive")


@dataclass
class LRFunction:
    kv_xi: tuple
    kv_eta: tuple
    cp_hom: np.ndarray
    gamma: float = 1.0
    aux: np.ndarray | None = None

    @property
    def key(self) -> tuple:
        return (self.kv_xi, self.kv_eta)

    @property
    def support(self) -> tuple[float, float, float, float]:
        return (self.kv_xi[0], self.kv_xi[-1], self.kv_eta[0], self.kv_eta[-1])

    @property
    def weight(self) -> float:
        return float(self.cp_hom[3])

    def copy(self) -> "LRFunction":
        return LRFunction(
            self.kv_xi, self.kv_eta, self.cp_hom.copy(), self.gamma,
            None if self.aux is None else self.aux.copy(),
        )


def to_projective(points, weights) -> np.ndarray:
    """Cartesian points (n, 3) and weights (n,) to homogeneous (n, 4)."""
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise GeometryError("weights must be positive")
    return np.concatenate([pts * w[..., None], w[..., None]], axis=-1)


def from_projective(cp_hom) -> tuple[np.ndarray, np.ndarray]:
    """Homogeneous points (..., 4) to Cartesian points and weights."""
    cp = np.asarray(cp_hom, dtype=float)
    w = cp[..., 3]
    if np.any(w <= 0):
        raise GeometryError("weights must be positive")
    return cp[..., :3] / w[..., None], w.copy()


def _merge_into(existing: LRFunction, parent: LRFunction, alpha: float) -> None:
    """Add ``alpha * parent`` onto an already existing function."""
    share = parent.gamma * alpha
    total = existing.gamma + share
    existing.cp_hom = (existing.cp_hom * existing.gamma + parent.cp_hom * share) / total
    if existing.aux is not None:
        existing.aux = (existing.aux * existing.gamma + parent.aux * share) / total
    existing.gamma = total


class LRMesh:
    """Box-partitioned parameter domain with its LR B-spline / NURBS basis."""

    def __init__(self, p: int, q: int, domain: tuple[float, float, float, float]):
        self.p = int(p)
        self.q = int(q)
        self.domain = tuple(float(v) for v in domain)
        self.functions: dict[tuple, LRFunction] = {}
        self.elements: list[tuple[float, float, float, float]] = []
        self._lines: dict[tuple[str, float], list[list]] = {}
        self._fixed: dict[str, list[float]] = {VERTICAL: [], HORIZONTAL: []}
        self._coords: dict[str, list[float]] = {VERTICAL: [], HORIZONTAL: []}
        self.version = 0
        self._cache: dict = {}

    # ------------------------------------------------------------------ build
    @classmethod
    def tensor(cls, knots_xi: Sequence[float], knots_eta: Sequence[float], p: int, q: int,
               cp_hom) -> "LRMesh":
        """Tensor-product mesh from open global knot vectors.

        ``cp_hom`` has shape ``(n_xi, n_eta, 4)``.
        """
        kx = [float(v) for v in knots_xi]
        ky = [float(v) for v in knots_eta]
        cp = np.asarray(cp_hom, dtype=float)
        nx, ny = len(kx) - p - 1, len(ky) - q - 1
        if cp.shape[:2] != (nx, ny):
            raise MeshError(f"control net shape {cp.shape[:2]} does not match ({nx}, {ny})")
        mesh = cls(p, q, (kx[0], kx[-1], ky[0], ky[-1]))
        for i in range(nx):
            for j in range(ny):
                f = LRFunction(tuple(kx[i:i + p + 2]), tuple(ky[j:j + q + 2]), cp[i, j].copy())
                mesh.functions[f.key] = f
        ux = sorted(set(kx))
        uy = sorted(set(ky))
        for u in ux:
            mesh._add_segment(VERTICAL, u, ky[0], ky[-1], kx.count(u))
        for v in uy:
            mesh._add_segment(HORIZONTAL, v, kx[0], kx[-1], ky.count(v))
        for v0, v1 in zip(uy, uy[1:]):
            for u0, u1 in zip(ux, ux[1:]):
                mesh.elements.append((u0, u1, v0, v1))
        return mesh

    def copy(self) -> "LRMesh":
        new = LRMesh(self.p, self.q, self.domain)
        new.functions = {k: f.copy() for k, f in self.functions.items()}
        new.elements = list(self.elements)
        new._lines = {k: [list(s) for s in v] for k, v in self._lines.items()}
        new._fixed = {k: list(v) for k, v in self._fixed.items()}
        new._coords = {k: list(v) for k, v in self._coords.items()}
        new.version = self.version
        return new

    # ------------------------------------------------------------- meshlines
    @property
    def meshlines(self) -> list[Meshline]:
        out = []
        for (direction, fixed), segs in sorted(self._lines.items()):
            for s, e, m in segs:
                out.append(Meshline(direction, fixed, s, e, m))
        return out

    def _snap(self, axis: str, value: float) -> float:
        coords = self._coords[axis]
        i = bisect.bisect_left(coords, value - KNOT_TOL)
        if i < len(coords) and abs(coords[i] - value) <= KNOT_TOL:
            return coords[i]
        return float(value)

    def _register(self, axis: str, value: float) -> None:
        coords = self._coords[axis]
        i = bisect.bisect_left(coords, value)
        if i == len(coords) or coords[i] != value:
            coords.insert(i, value)

    def _add_segment(self, direction: str, fixed: float, start: float, end: float, mult: int) -> None:
        key = (direction, fixed)
        is_new = key not in self._lines
        segs = self._lines.get(key, [])
        cuts = sorted({start, end, *(s for s, _, _ in segs), *(e for _, e, _ in segs)})
        pieces = []
        for a, b in zip(cuts, cuts[1:]):
            mid = 0.5 * (a + b)
            m = 0
            for s, e, sm in segs:
                if s <= mid <= e:
                    m = max(m, sm)
            if start <= mid <= end:
                m = max(m, mult)
            if m == 0:
                continue
            if pieces and pieces[-1][1] == a and pieces[-1][2] == m:
                pieces[-1][1] = b
            else:
                pieces.append([a, b, m])
        self._lines[key] = pieces
        if is_new:
            bisect.insort(self._fixed[direction], fixed)
        # coordinates along each axis: xi values are fixed for vertical lines and
        # endpoints for horizontal ones
        along = HORIZONTAL if direction == VERTICAL else VERTICAL
        self._register(direction, fixed)
        self._register(along, start)
        self._register(along, end)

    def coverage(self, direction: str, fixed: float, a: float, b: float) -> int:
        """Smallest multiplicity of meshlines at ``fixed`` over ``[a, b]``; 0 on a gap."""
        segs = self._lines.get((direction, fixed))
        if not segs:
            return 0
        pos = a
        best = None
        for s, e, m in segs:
            if e < pos - KNOT_TOL:
                continue
            if s > pos + KNOT_TOL:
                return 0
            best = m if best is None else min(best, m)
            pos = max(pos, e)
            if pos >= b - KNOT_TOL:
                return best
        return 0

    def _fixed_between(self, direction: str, lo: float, hi: float) -> list[float]:
        fx = self._fixed[direction]
        i = bisect.bisect_right(fx, lo + KNOT_TOL)
        j = bisect.bisect_left(fx, hi - KNOT_TOL)
        return fx[i:j]

    # ----------------------------------------------------------- properties
    def traversing_line(self, f: LRFunction):
        """First meshline that fully traverses ``f`` without being one of its knot lines."""
        u0, u1, v0, v1 = f.support
        for c in self._fixed_between(VERTICAL, u0, u1):
            if self.coverage(VERTICAL, c, v0, v1) > multiplicity(f.kv_xi, c):
                return VERTICAL, c
        for c in self._fixed_between(HORIZONTAL, v0, v1):
            if self.coverage(HORIZONTAL, c, u0, u1) > multiplicity(f.kv_eta, c):
                return HORIZONTAL, c
        return None

    def has_minimal_support(self, f: LRFunction) -> bool:
        return self.traversing_line(f) is None

    # ------------------------------------------------------------ insertion
    def insert(self, line: Meshline) -> int:
        """Insert a meshline in place; returns the number of functions split.

        Raises
        ------
        AlignmentError
            If the line ends away from existing perpendicular meshlines or
            would cut an element partially.
        PrimitivityError
            If the line is not a primitive extension, or splits nothing.
        """
        d = line.direction
        along = HORIZONTAL if d == VERTICAL else VERTICAL
        c = self._snap(d, line.fixed)
        s = self._snap(along, line.start)
        e = self._snap(along, line.end)
        m = line.multiplicity
        lo, hi = (self.domain[0], self.domain[1]) if d == VERTICAL else (self.domain[2], self.domain[3])
        alo, ahi = (self.domain[2], self.domain[3]) if d == VERTICAL else (self.domain[0], self.domain[1])
        if not lo < c < hi:
            raise MeshError(f"meshline at {c} is not interior to the domain")
        if s < alo - KNOT_TOL or e > ahi + KNOT_TOL:
            raise MeshError("meshline leaves the parameter domain")
        for end in (s, e):
            if self.coverage(along, end, c, c) == 0:
                raise AlignmentError(f"meshline end {end} at {c} does not meet a perpendicular meshline")

        existing = self.coverage(d, c, s, e)
        if existing >= m:
            return 0
        if m > 1 and existing < m - 1:
            raise PrimitivityError("multiplicity raise must follow an existing line of multiplicity m-1")

        trial = self.copy_lines_only()
        trial._add_segment(d, c, s, e, m)
        targets = []
        for f in self.functions.values():
            kv_cut, kv_other = (f.kv_xi, f.kv_eta) if d == VERTICAL else (f.kv_eta, f.kv_xi)
            if kv_cut[0] < c < kv_cut[-1]:
                if trial.coverage(d, c, kv_other[0], kv_other[-1]) > multiplicity(kv_cut, c):
                    targets.append(f.key)
        if not targets:
            raise PrimitivityError("meshline does not split any B-spline")

        for idx in self._crossed_elements(d, c, s, e):
            u0, u1, v0, v1 = self.elements[idx]
            if d == VERTICAL:
                if v0 < s - KNOT_TOL or v1 > e + KNOT_TOL:
                    raise AlignmentError("meshline would cut an element partially")
            elif u0 < s - KNOT_TOL or u1 > e + KNOT_TOL:
                raise AlignmentError("meshline would cut an element partially")

        self._add_segment(d, c, s, e, m)
        new_elements = []
        for box in self.elements:
            u0, u1, v0, v1 = box
            if d == VERTICAL and u0 < c < u1 and v0 < e and v1 > s:
                new_elements += [(u0, c, v0, v1), (c, u1, v0, v1)]
            elif d == HORIZONTAL and v0 < c < v1 and u0 < e and u1 > s:
                new_elements += [(u0, u1, v0, c), (u0, u1, c, v1)]
            else:
                new_elements.append(box)
        self.elements = new_elements
        n_split = self._split_to_fixpoint(targets)
        self.version += 1
        self._cache.clear()
        return n_split

    def copy_lines_only(self) -> "LRMesh":
        new = LRMesh(self.p, self.q, self.domain)
        new._lines = {k: [list(s) for s in v] for k, v in self._lines.items()}
        new._fixed = {k: list(v) for k, v in self._fixed.items()}
        new._coords = {k: list(v) for k, v in self._coords.items()}
        return new

    def _crossed_elements(self, d: str, c: float, s: float, e: float) -> list[int]:
        out = []
        for i, (u0, u1, v0, v1) in enumerate(self.elements):
            if d == VERTICAL:
                if u0 < c < u1 and v0 < e and v1 > s:
                    out.append(i)
            elif v0 < c < v1 and u0 < e and u1 > s:
                out.append(i)
        return out

    def _split_to_fixpoint(self, keys: Iterable[tuple]) -> int:
        queue = deque(keys)
        n_split = 0
        while queue:
            key = queue.popleft()
            f = self.functions.get(key)
            if f is None:
                continue
            hit = self.traversing_line(f)
            if hit is None:
                continue
            d, c = hit
            del self.functions[key]
            n_split += 1
            if d == VERTICAL:
                kv1, kv2, a1, a2 = split_knots(f.kv_xi, c)
                children = [((kv1, f.kv_eta), a1), ((kv2, f.kv_eta), a2)]
            else:
                kv1, kv2, a1, a2 = split_knots(f.kv_eta, c)
                children = [((f.kv_xi, kv1), a1), ((f.kv_xi, kv2), a2)]
            for ckey, alpha in children:
                existing = self.functions.get(ckey)
                if existing is not None:
                    _merge_into(existing, f, alpha)
                else:
                    child = LRFunction(ckey[0], ckey[1], f.cp_hom.copy(), f.gamma * alpha,
                                       None if f.aux is None else f.aux.copy())
                    self.functions[ckey] = child
                queue.append(ckey)
        return n_split

    # ------------------------------------------------------------ ordering
    def keys(self) -> list[tuple]:
        """Functions in canonical order (row-major by eta, then xi knots)."""
        if "keys" not in self._cache:
            self._cache["keys"] = sorted(self.functions, key=lambda k: (k[1], k[0]))
        return self._cache["keys"]

    def index(self) -> dict[tuple, int]:
        if "index" not in self._cache:
            self._cache["index"] = {k: i for i, k in enumerate(self.keys())}
        return self._cache["index"]

    def support_arrays(self) -> np.ndarray:
        """(n, 4) array of function support boxes in canonical order."""
        if "supports" not in self._cache:
            self._cache["supports"] = np.array([self.functions[k].support for k in self.keys()])
        return self._cache["supports"]

    def cp_array(self) -> np.ndarray:
        return np.array([self.functions[k].cp_hom for k in self.keys()])

    def gammas(self) -> np.ndarray:
        return np.array([self.functions[k].gamma for k in self.keys()])

    def set_aux(self, values) -> None:
        """Attach auxiliary homogeneous layers (n, k, 4) in canonical order."""
        vals = np.asarray(values, dtype=float)
        for k, v in zip(self.keys(), vals):
            self.functions[k].aux = v.copy()

    def get_aux(self) -> np.ndarray:
        return np.array([self.functions[k].aux for k in self.keys()])

    @property
    def n_functions(self) -> int:
        return len(self.functions)

    def element_functions(self, box) -> np.ndarray:
        """Canonical indices of functions whose support overlaps the element interior."""
        u0, u1, v0, v1 = box
        sup = self.support_arrays()
        hit = (sup[:, 0] < u1 - KNOT_TOL) & (sup[:, 1] > u0 + KNOT_TOL) & \
              (sup[:, 2] < v1 - KNOT_TOL) & (sup[:, 3] > v0 + KNOT_TOL)
        return np.flatnonzero(hit)

    def locate(self, xi: float, eta: float) -> int:
        """Index of an element containing the point (closed boxes, first match)."""
        for i, (u0, u1, v0, v1) in enumerate(self.elements):
            if u0 <= xi <= u1 and v0 <= eta <= v1:
                return i
        raise MeshError(f"point ({xi}, {eta}) outside the parameter domain")

    # ----------------------------------------------------------- evaluation
    def basis_matrix(self, xi, eta, derivatives: bool = False):
        """Scaled B-spline values ``gamma_i B_i`` at points, shape (npts, n).

        With ``derivatives`` also returns the xi and eta derivatives.
        """
        x = np.atleast_1d(np.asarray(xi, dtype=float))
        y = np.atleast_1d(np.asarray(eta, dtype=float))
        n = self.n_functions
        val = np.zeros((x.size, n))
        dx = np.zeros((x.size, n)) if derivatives else None
        dy = np.zeros((x.size, n)) if derivatives else None
        umax, vmax = self.domain[1], self.domain[3]
        for i, k in enumerate(self.keys()):
            f = self.functions[k]
            u0, u1, v0, v1 = f.support
            mask = (x >= u0) & (x <= u1) & (y >= v0) & (y <= v1)
            if not mask.any():
                continue
            nx, dnx = eval_basis_1d(f.kv_xi, x[mask], self.p, closed_end=u1 == umax)
            ny, dny = eval_basis_1d(f.kv_eta, y[mask], self.q, closed_end=v1 == vmax)
            val[mask, i] = f.gamma * nx * ny
            if derivatives:
                dx[mask, i] = f.gamma * dnx * ny
                dy[mask, i] = f.gamma * nx * dny
        if derivatives:
            return val, dx, dy
        return val

    def rational_basis(self, xi, eta):
        """Rational basis ``R_i = B_i w_i / W`` with ``W = sum gamma B w``; returns gamma R."""
        b = self.basis_matrix(xi, eta)
        w = self.cp_array()[:, 3]
        num = b * w
        den = num.sum(axis=1)
        if np.any(den <= 0):
            raise GeometryError("weight function vanishes")
        return num / den[:, None]

    def surface_point(self, xi, eta, layer: str = "cp", derivatives: bool = False):
        """Evaluate the surface (or an auxiliary layer) at parameter points."""
        hom = self.cp_array() if layer == "cp" else self.get_aux()[:, int(layer)]
        if derivatives:
            b, bx, by = self.basis_matrix(xi, eta, derivatives=True)
        else:
            b = self.basis_matrix(xi, eta)
        h = b @ hom
        if np.any(h[:, 3] <= 0):
            raise GeometryError("weight function vanishes")
        pts = h[:, :3] / h[:, 3:4]
        if not derivatives:
            return pts[0] if np.ndim(xi) == 0 else pts
        hx, hy = bx @ hom, by @ hom
        tx = (hx[:, :3] - pts * hx[:, 3:4]) / h[:, 3:4]
        ty = (hy[:, :3] - pts * hy[:, 3:4]) / h[:, 3:4]
        if np.ndim(xi) == 0:
            return pts[0], tx[0], ty[0]
        return pts, tx, ty

    def greville_points(self) -> np.ndarray:
        return np.array([[greville(self.functions[k].kv_xi), greville(self.functions[k].kv_eta)]
                         for k in self.keys()])

    # ------------------------------------------------------------ diagnostics
    def check_linear_independence(self, tol: float = 1e-10) -> bool:
        """Full column rank of the collocation matrix of the scaled basis.

        Samples a unisolvent (p+1) x (q+1) Gauss grid inside every element plus
        all Greville points, so a rank deficit means genuine dependence.
        """
        gx, _ = np.polynomial.legendre.leggauss(self.p + 1)
        gy, _ = np.polynomial.legendre.leggauss(self.q + 1)
        tx, ty = 0.5 * (gx + 1), 0.5 * (gy + 1)
        pts = []
        for u0, u1, v0, v1 in self.elements:
            uu, vv = np.meshgrid(u0 + (u1 - u0) * tx, v0 + (v1 - v0) * ty, indexing="ij")
            pts.append(np.column_stack([uu.ravel(), vv.ravel()]))
        pts.append(self.greville_points())
        pts = np.vstack(pts)
        a = self.basis_matrix(pts[:, 0], pts[:, 1])
        r = scipy.linalg.qr(a, mode="r", pivoting=True)[0]
        diag = np.abs(np.diag(r))
        rank = int(np.sum(diag > tol * diag[0]))
        return rank == self.n_functions

    def check_minimal_support(self) -> bool:
        return all(self.has_minimal_support(f) for f in self.functions.values())

    def element_depths(self, base_width: float, base_height: float) -> np.ndarray:
        """(E, 2) integer refinement depth per direction relative to base element sizes."""
        out = np.empty((len(self.elements), 2), dtype=int)
        for i, (u0, u1, v0, v1) in enumerate(self.elements):
            out[i, 0] = int(round(np.log2(base_width / (u1 - u0))))
            out[i, 1] = int(round(np.log2(base_height / (v1 - v0))))
        return out


def insert_meshline(mesh: LRMesh, line: Meshline) -> LRMesh:
    """Functional form of :meth:`LRMesh.insert`; the input mesh is left untouched."""
    new = mesh.copy()
    new.insert(line)
    return new


def has_minimal_support(f: LRFunction, mesh: LRMesh) -> bool:
    return mesh.has_minimal_support(f)


def check_linear_independence(mesh: LRMesh) -> bool:
    return mesh.check_linear_independence()


def surface_point(mesh: LRMesh, xi, eta, derivatives: bool = False):
    return mesh.surface_point(xi, eta, derivatives=derivatives)
