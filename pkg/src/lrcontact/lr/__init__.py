"""LR NURBS kernel: local knot vectors, LR meshes and refinement."""
from .knots import KnotVectorError, SplitError, alpha_coefficients, eval_basis_1d, split_knots
from .mesh import (
    HORIZONTAL,
    VERTICAL,
    AlignmentError,
    GeometryError,
    LRFunction,
    LRMesh,
    MeshError,
    Meshline,
    PrimitivityError,
    check_linear_independence,
    from_projective,
    has_minimal_support,
    insert_meshline,
    surface_point,
    to_projective,
)

__all__ = [
    "AlignmentError",
    "alpha_coefficients",
    "check_linear_independence",
    "eval_basis_1d",
    "from_projective",
    "GeometryError",
    "has_minimal_support",
    "HORIZONTAL",
    "insert_meshline",
    "KnotVectorError",
    "LRFunction",
    "LRMesh",
    "MeshError",
    "Meshline",
    "PrimitivityError",
    "split_knots",
    "SplitError",
    "surface_point",
    "to_projective",
    "VERTICAL",
]
