"""CSV, legacy VTK and JSON writers for simulation runs."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .lr.io import mesh_to_dict
from .lr.mesh import LRMesh


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def with_positions(mesh: LRMesh, x) -> LRMesh:
    """Copy of ``mesh`` carrying the deformed positions as auxiliary layer 0."""
    out = mesh.copy()
    w = out.cp_array()[:, 3:4]
    out.set_aux(np.hstack([x * w, w])[:, None, :])
    return out


def write_mesh_json(path, mesh: LRMesh, x=None) -> None:
    m = mesh if x is None else with_positions(mesh, x)
    Path(path).write_text(json.dumps(mesh_to_dict(m)))


def sample_surface(mesh: LRMesh, x, per_element: int = 4):
    """Points and quad cells sampling every element on a regular grid."""
    m = with_positions(mesh, x)
    k = per_element
    t = np.linspace(0.0, 1.0, k + 1)
    params, cells, elem = [], [], []
    for e, (u0, u1, v0, v1) in enumerate(m.elements):
        uu, vv = np.meshgrid(u0 + (u1 - u0) * t, v0 + (v1 - v0) * t, indexing="ij")
        base = e * (k + 1) ** 2
        params.append(np.column_stack([uu.ravel(), vv.ravel()]))
        for i in range(k):
            for j in range(k):
                a = base + i * (k + 1) + j
                cells.append((a, a + k + 1, a + k + 2, a + 1))
                elem.append(e)
    uv = np.vstack(params)
    pts = m.surface_point(uv[:, 0], uv[:, 1], layer=0)
    return pts, np.array(cells, dtype=int), np.array(elem, dtype=int)


def write_vtk(path, mesh: LRMesh, x, per_element: int = 4, title: str = "lrcontact surface") -> None:
    """Legacy ASCII unstructured grid with POINTS and quad CELLS."""
    pts, cells, elem = sample_surface(mesh, x, per_element)
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(pts)} double"]
    lines += [f"{p[0]!r} {p[1]!r} {p[2]!r}" for p in pts.tolist()]
    lines.append(f"CELLS {len(cells)} {5 * len(cells)}")
    lines += [f"4 {a} {b} {c} {d}" for a, b, c, d in cells.tolist()]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += ["9"] * len(cells)
    lines += [f"CELL_DATA {len(cells)}", "SCALARS element int 1", "LOOKUP_TABLE default"]
    lines += [str(e) for e in elem.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")
