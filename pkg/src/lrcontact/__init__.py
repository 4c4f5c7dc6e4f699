"""LR NURBS membranes with Bezier extraction and adaptive rigid-sphere contact."""
from importlib.metadata import PackageNotFoundError, version

from .adaptive import AdaptiveParams, coarsen_rebuild, needs_coarsen, needs_refine, plan_refinement, refine
from .bezier import element_operator
from .contact import ContactParams, RigidSphere, contact_force
from .discretize import discretize
from .kernels import BACKEND_NAME
from .lr import LRMesh, Meshline
from .membrane import BoundaryCondition, MembraneModel
from .scenarios import RunReport, ScenarioConfig, compare_runs, load_config, resolve_config, run
from .solver import SimState, SolveControls, newton_solve, solve_load_step

__all__ = [
    "AdaptiveParams",
    "BACKEND_NAME",
    "BoundaryCondition",
    "coarsen_rebuild",
    "compare_runs",
    "contact_force",
    "ContactParams",
    "discretize",
    "element_operator",
    "load_config",
    "LRMesh",
    "MembraneModel",
    "Meshline",
    "needs_coarsen",
    "needs_refine",
    "newton_solve",
    "plan_refinement",
    "refine",
    "resolve_config",
    "RigidSphere",
    "run",
    "RunReport",
    "ScenarioConfig",
    "SimState",
    "solve_load_step",
    "SolveControls",
]

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"
