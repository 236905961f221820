"""Projection-based time-splitting finite elements for nematic liquid crystal flow."""

from .config import ConfigError, Preset, SimConfig, parse_config
from .mesh import TriMesh, build_uniform_triangulation, mesh_size
from .potential import F_tilde, f_tilde, theoretical_HF
from .scheme import SimState, time_loop

__all__ = [
    "ConfigError", "Preset", "SimConfig", "parse_config",
    "TriMesh", "build_uniform_triangulation", "mesh_size",
    "F_tilde", "f_tilde", "theoretical_HF",
    "SimState", "time_loop",
]
__version__ = "0.1.0"
