"""Energy logs (CSV) and field snapshots (legacy VTK)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .diagnostics import EnergyRecord
from .mesh import TriMesh, write_vtk_mesh


def write_energy_csv(records, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(EnergyRecord.columns())
        for r in records:
            w.writerow([f"{v:.17g}" for v in r.as_row()])
    return path


def read_energy_csv(path) -> list[EnergyRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != EnergyRecord.columns():
            raise ValueError(f"unexpected header {header}")
        return [EnergyRecord(*map(float, row)) for row in reader]


def snapshot_path(prefix, step: int) -> Path:
    return Path(f"{prefix}_{step:06d}.vtk")


def write_field_snapshot(state, mesh: TriMesh, path) -> Path:
    """Velocity, director, ``|d|`` and pressure as VTK point data."""
    data = {
        "velocity": state.u,
        "director": state.d,
        "director_norm": np.linalg.norm(state.d, axis=1),
        "pressure": state.p,
    }
    return write_vtk_mesh(mesh, path, data, title=f"nemflow t={state.t!r}")


def read_vtk(path) -> dict:
    """Minimal reader for files written by :func:`write_field_snapshot`."""
    tokens = Path(path).read_text().split("\n")
    out: dict = {"point_data": {}}
    i = 0
    while i < len(tokens):
        line = tokens[i].split()
        if not line:
            i += 1
            continue
        key = line[0]
        if key == "POINTS":
            n = int(line[1])
            out["points"] = np.array([list(map(float, tokens[i + 1 + j].split())) for j in range(n)])
            i += n + 1
        elif key == "CELLS":
            n = int(line[1])
            out["cells"] = np.array([list(map(int, tokens[i + 1 + j].split()))[1:] for j in range(n)])
            i += n + 1
        elif key == "CELL_TYPES":
            n = int(line[1])
            out["cell_types"] = np.array([int(tokens[i + 1 + j]) for j in range(n)])
            i += n + 1
        elif key == "SCALARS":
            name = line[1]
            n = len(out["points"])
            out["point_data"][name] = np.array([float(tokens[i + 2 + j]) for j in range(n)])
            i += n + 2
        elif key == "VECTORS":
            name = line[1]
            n = len(out["points"])
            out["point_data"][name] = np.array(
                [list(map(float, tokens[i + 1 + j].split())) for j in range(n)])
            i += n + 1
        else:
            i += 1
    return out
