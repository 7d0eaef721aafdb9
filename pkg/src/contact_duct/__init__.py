"""Steady two-layer subsonic Euler flow with a contact discontinuity in a perturbed duct."""

from .duct import WallPerturbation
from .farfield import FarFieldSolution, LeftState, solve_farfield
from .gas import GasConstants, GasState, LayerInvariants
from .grid import LagrangianGrid, build_grid
from .picard import PicardOptions, run
from .pipeline import RunConfig, run_pipeline

__all__ = [
    "GasConstants", "GasState", "LayerInvariants", "LeftState", "FarFieldSolution",
    "solve_farfield", "WallPerturbation", "LagrangianGrid", "build_grid", "PicardOptions",
    "run", "RunConfig", "run_pipeline",
]
__version__ = "0.1.0"
