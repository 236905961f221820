"""Energies, annihilation detection and the stability-table harness."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import fem
from .config import SimConfig
from .potential import theoretical_HF

log = logging.getLogger(__name__)

FLAT_CURVE_EKIN = 1e-20
NO_ANNIHILATION_EKIN_FRACTION = 1e-2
NO_ANNIHILATION_MIN_D = 0.5


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    E_kin: float
    E_elastic: float
    E_penalty: float
    E_total: float
    diss_u: float
    diss_w: float
    min_d: float
    max_d: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_row(self) -> list[float]:
        return [getattr(self, c) for c in self.columns()]


def compute_energies(state, cfg: SimConfig, mesh, ops=None) -> EnergyRecord:
    """Kinetic, elastic and penalty energies plus the step dissipation terms.

    Quadratic terms use the exact P1 matrices; the penalty integral uses the
    degree-4 rule also used for the penalty load.
    """
    if ops is not None:
        Ms, Ls = ops.Ms, ops.Ls
    else:
        Ms, Ls = fem.assemble_mass_P1(mesh), fem.assemble_stiffness_P1(mesh)
    u, d = state.u, state.d
    e_kin = 0.5 * float(np.einsum("ic,ic->", u, Ms @ u))
    e_el = 0.5 * cfg.lam * float(np.einsum("ic,ic->", d, Ls @ d))
    _, pen = fem.penalty_terms(mesh, d, cfg.eps)
    e_pen = cfg.lam * pen
    diss_u = cfg.k * cfg.nu * float(np.einsum("ic,ic->", u, Ls @ u))
    if state.w is None:
        diss_w = 0.0
    else:
        diss_w = cfg.k * cfg.lam * cfg.gamma * float(mesh.element_areas @ np.sum(state.w ** 2, axis=1))
    nd = np.linalg.norm(d, axis=1)
    return EnergyRecord(state.t, e_kin, e_el, e_pen, e_kin + e_el + e_pen,
                        diss_u, diss_w, float(nd.min()), float(nd.max()))


@dataclass
class RunSummary:
    """Outcome of one run.

    ``T_A`` is the (earliest) time of maximal kinetic energy; it is ``None``
    for unstable runs.  ``annihilated`` is ``False`` for stable runs whose
    kinetic energy stays negligible while a defect persists.
    """

    stable: bool
    T_A: float | None = None
    E_kin_max: float | None = None
    final: EnergyRecord | None = None
    flat_curve: bool = False
    annihilated: bool | None = None
    message: str = ""

    def t_a_label(self) -> str:
        if not self.stable:
            return "--"
        if self.annihilated is False:
            return "No annihil."
        return f"{self.T_A:.6g}"


def detect_annihilation(records, stable: bool = True, message: str = "",
                        defect_depth=None) -> RunSummary:
    """Summarise a run from its energy records.

    Parameters
    ----------
    records : list of EnergyRecord
    stable, message
        Outcome of the time loop.
    defect_depth : sequence of float, optional
        Per-record minimum of ``|d_h|`` over the whole domain (see
        :func:`nemflow.fem.min_norm_p1`).  When omitted the nodal minimum
        ``min_d`` is used, which misses defect cores narrower than the mesh.
    """
    if not stable:
        return RunSummary(False, message=message, final=records[-1] if records else None)
    if not records:
        raise ValueError("no energy records")
    ekin = np.array([r.E_kin for r in records])
    i = int(np.argmax(ekin))  # first maximum on ties
    emax = float(ekin[i])
    e_el0 = records[0].E_elastic
    depth = [r.min_d for r in records] if defect_depth is None else defect_depth
    persistent_defect = max(depth) <= NO_ANNIHILATION_MIN_D
    quiet = emax < NO_ANNIHILATION_EKIN_FRACTION * e_el0
    return RunSummary(True, records[i].t, emax, records[-1],
                      flat_curve=emax < FLAT_CURVE_EKIN,
                      annihilated=not (quiet and persistent_defect),
                      message=message)


def run_case(cfg: SimConfig, preset=None, observer=None) -> RunSummary:
    from .mesh import build_uniform_triangulation
    from .scheme import SimulationError, time_loop

    mesh = build_uniform_triangulation(cfg.domain, cfg.nx, cfg.ny)
    depth = []

    def watch(state, rec):
        if state.d.shape[1] == 2:
            depth.append(fem.min_norm_p1(mesh, state.d))
        if observer is not None:
            observer(state, rec)

    try:
        res = time_loop(cfg, preset, mesh=mesh, observer=watch)
    except SimulationError as exc:
        log.warning("run failed: %s", exc)
        return RunSummary(False, message=f"solver failure: {exc}")
    return detect_annihilation(res.records, res.stable, res.message,
                               defect_depth=depth if len(depth) == len(res.records) else None)


AXES = ("beta", "eps")


def run_table_harness(axis1: list, axis2: list, base: SimConfig, axis1_name: str = "beta",
                      preset=None, hf_scale: float | None = None, csv_path=None,
                      progress=None) -> dict:
    """One run per ``(axis1, axis2)`` cell.

    ``axis1`` varies ``beta`` or ``eps``; ``axis2`` is the stabilisation
    multiplier ``M`` with ``hf_value = M * hf_scale`` (``hf_scale`` defaults
    to the theoretical constant for the configured dimension).  Failed cells
    are recorded as unstable and the sweep continues.
    """
    if axis1_name not in AXES:
        raise ValueError(f"axis1_name must be one of {AXES}")
    scale = theoretical_HF(base.dim) if hf_scale is None else hf_scale
    grid = {}
    for a in axis1:
        for mval in axis2:
            cfg = base.replace(**{axis1_name: float(a)}, hf_value=float(mval) * scale)
            try:
                summary = run_case(cfg, preset)
            except Exception as exc:  # noqa: BLE001 - keep sweeping
                log.exception("cell (%s, %s) failed", a, mval)
                summary = RunSummary(False, message=f"error: {exc}")
            grid[(a, mval)] = summary
            if progress is not None:
                progress(a, mval, summary)
    if csv_path is not None:
        write_harness_csv(grid, csv_path, axis1_name)
    return grid


def write_harness_csv(grid: dict, path, axis1_name="axis1") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis1", "axis2", "stable", "T_A", "E_kin_max"])
        for (a, mval), s in grid.items():
            ek = "--" if s.E_kin_max is None else repr(s.E_kin_max)
            w.writerow([a, mval, int(s.stable), s.t_a_label(), ek])
    return path


def read_harness_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def energy_law_violations(records, reports=None, rel_tol=1e-8) -> list[int]:
    """Steps ``n`` where ``E^{n+1} + dissipation > E^n + rel_tol E^0``."""
    if not records:
        return []
    slack = rel_tol * records[0].E_total
    bad = []
    for n in range(1, len(records)):
        r0, r1 = records[n - 1], records[n]
        if r1.E_total + r1.diss_u + r1.diss_w > r0.E_total + slack:
            bad.append(n)
    return bad


def global_estimate(records) -> float:
    """``max_r (E^{r+1} + cumulative dissipation) / E^0`` (``<= 1`` when stable)."""
    e0 = records[0].E_total
    acc, worst = 0.0, -math.inf
    for r in records[1:]:
        acc += r.diss_u + r.diss_w
        worst = max(worst, r.E_total + acc)
    return worst / e0 if records[1:] else 1.0
