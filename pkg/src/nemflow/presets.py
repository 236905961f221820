"""Initial data for the defect-annihilation experiments."""

from __future__ import annotations

import numpy as np

from .config import Preset, SimConfig
from .mesh import TriMesh


def _unnormalised_director(preset: Preset, x, y):
    if preset is Preset.two_singularities:
        # defects at (+-0.5, 0)
        return np.stack([x ** 2 + y ** 2 - 0.25, y], axis=-1)
    if preset is Preset.four_singularities:
        # defects at (+-0.5, 0) and (0, +-0.25)
        return np.stack([x ** 2 / 0.5 ** 2 + y ** 2 / 0.25 ** 2 - 1.0, -x * y], axis=-1)
    raise ValueError(f"unknown preset {preset!r}")


def initial_director(preset, eps: float):
    """Callable ``d0(x, y)`` returning ``dt / sqrt(|dt|^2 + eps^2)``."""
    preset = Preset(preset)

    def d0(x, y):
        dt = _unnormalised_director(preset, np.asarray(x, float), np.asarray(y, float))
        return dt / np.sqrt(np.sum(dt * dt, axis=-1, keepdims=True) + eps ** 2)

    return d0


def build_preset_initial_data(preset, cfg: SimConfig, mesh: TriMesh, ops=None):
    """``(d0h, u0h, p0h)`` for a preset; the initial velocity is zero."""
    from .scheme import init_director, init_velocity_pressure

    d0h = init_director(initial_director(preset, cfg.eps), mesh)
    u0 = np.zeros((mesh.n_nodes, cfg.dim))
    u0h, p0h = init_velocity_pressure(u0, mesh, cfg, ops=ops)
    return d0h, u0h, p0h
