"""Versioned JSON serialization of LR meshes."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mesh import LRFunction, LRMesh, MeshError

FORMAT = "lr-nurbs-mesh"
VERSION = 1


def mesh_to_dict(mesh: LRMesh) -> dict:
    funcs = []
    for k in mesh.keys():
        f = mesh.functions[k]
        entry = {
            "knots_xi": list(f.kv_xi),
            "knots_eta": list(f.kv_eta),
            "cp_hom": [float(v) for v in f.cp_hom],
            "gamma": float(f.gamma),
        }
        if f.aux is not None:
            entry["aux"] = np.asarray(f.aux, dtype=float).tolist()
        funcs.append(entry)
    return {
        "format": FORMAT,
        "version": VERSION,
        "degrees": [mesh.p, mesh.q],
        "domain": list(mesh.domain),
        "meshlines": [
            {"direction": ln.direction, "fixed": ln.fixed, "span": [ln.start, ln.end],
             "multiplicity": ln.multiplicity}
            for ln in mesh.meshlines
        ],
        "elements": [list(box) for box in mesh.elements],
        "functions": funcs,
    }


def mesh_from_dict(doc: dict) -> LRMesh:
    if doc.get("format") != FORMAT:
        raise MeshError(f"not an LR mesh document: format={doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise MeshError(f"unsupported mesh document version {doc.get('version')!r}")
    p, q = doc["degrees"]
    mesh = LRMesh(p, q, tuple(doc["domain"]))
    for ln in doc["meshlines"]:
        mesh._add_segment(ln["direction"], float(ln["fixed"]), float(ln["span"][0]),
                          float(ln["span"][1]), int(ln["multiplicity"]))
    mesh.elements = [tuple(float(v) for v in box) for box in doc["elements"]]
    for entry in doc["functions"]:
        aux = np.array(entry["aux"], dtype=float) if "aux" in entry else None
        f = LRFunction(tuple(float(v) for v in entry["knots_xi"]),
                       tuple(float(v) for v in entry["knots_eta"]),
                       np.array(entry["cp_hom"], dtype=float), float(entry["gamma"]), aux)
        mesh.functions[f.key] = f
    return mesh


def save_mesh(mesh: LRMesh, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh)))


def load_mesh(path) -> LRMesh:
    return mesh_from_dict(json.loads(Path(path).read_text()))
