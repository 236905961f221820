"""Three-stage projection time step and the time loop.

Each step solves, in order:

1. director ``d`` and the auxiliary P0 field ``w`` (through the Schur
   complement of the ``w`` block, which is block diagonal per element);
2. the stabilised pressure-Poisson problem for ``p``;
3. one scalar convection-diffusion system per velocity component.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import fem
from .config import SimConfig
from .linalg import SolveInfo, SolverError, invert_blockdiag, pcg, solve_general
from .mesh import TriMesh

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e3


class SimulationError(RuntimeError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass
class SimState:
    """Discrete unknowns at time ``t``.

    ``u`` and ``d`` are ``(n_nodes, 2)``, ``p`` is ``(n_nodes,)`` and ``w``
    (the last auxiliary field, kept for diagnostics) is ``(n_elems, 2)``.
    """

    u: np.ndarray
    p: np.ndarray
    d: np.ndarray
    w: np.ndarray | None = None
    t: float = 0.0
    step_index: int = 0

    def copy(self) -> "SimState":
        return SimState(self.u.copy(), self.p.copy(), self.d.copy(),
                        None if self.w is None else self.w.copy(), self.t, self.step_index)

    def is_finite(self) -> bool:
        arrays = [self.u, self.p, self.d] + ([] if self.w is None else [self.w])
        return all(np.isfinite(a).all() for a in arrays)


@dataclass
class StepReport:
    director: SolveInfo = field(default_factory=SolveInfo)
    pressure: SolveInfo = field(default_factory=SolveInfo)
    velocity: list = field(default_factory=list)
    energy_before: float = np.nan
    energy_after: float = np.nan
    diss_u: float = np.nan
    diss_w: float = np.nan

    @property
    def energy_margin(self) -> float:
        """``E_before - (E_after + dissipation)``; non-negative when the energy law holds."""
        return self.energy_before - (self.energy_after + self.diss_u + self.diss_w)


class Operators:
    """State-independent matrices for one mesh and configuration."""

    def __init__(self, mesh: TriMesh, cfg: SimConfig):
        self.mesh, self.cfg = mesh, cfg
        m = cfg.dim
        self.Ms = fem.assemble_mass_P1(mesh)
        self.Ls = fem.assemble_stiffness_P1(mesh)
        self.Md = fem.vector_expand(self.Ms, m)
        self.Ld = fem.vector_expand(self.Ls, m)
        self.Mwd = fem.assemble_P1P0_mass(mesh, m)
        self.Mdw = self.Mwd.T.tocsr()
        self.Gp = fem.assemble_pressure_gradient(mesh, m)
        self.J = fem.assemble_pressure_stabilization(mesh, cfg.S, cfg.nu)
        self.P = (cfg.k * self.Ls + self.J).tocsr()
        self.node_mass = np.asarray(self.Ms.sum(axis=1)).ravel()
        self.interior = mesh.interior_nodes
        self.Ms_int = self.Ms[self.interior][:, self.interior].tocsr()
        self.Ls_int = self.Ls[self.interior][:, self.interior].tocsr()

    @property
    def hf_coef(self) -> float:
        return self.cfg.hf_value / (2.0 * self.cfg.eps ** 2)


def _ops(mesh, cfg, ops):
    if ops is None or ops.mesh is not mesh or ops.cfg != cfg:
        return Operators(mesh, cfg)
    return ops


def init_director(d0: Callable, mesh: TriMesh) -> np.ndarray:
    """Nodal interpolation of ``d0(x, y) -> (..., 2)``."""
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return np.ascontiguousarray(np.asarray(d0(x, y), dtype=float).reshape(mesh.n_nodes, -1))


def init_velocity_pressure(u0: np.ndarray, mesh: TriMesh, cfg: SimConfig, ops=None):
    """Stabilised L2 projection of nodal velocity data onto (V_h, P_h).

    Solves ``(u, v) + (grad p, v) = (u0, v)`` and ``(div u, q) + j(p, q) = 0``
    with a zero-mean multiplier on ``p``.
    """
    ops = _ops(mesh, cfg, ops)
    m, n = cfg.dim, mesh.n_nodes
    u0 = np.asarray(u0, dtype=float).reshape(n, m)
    if not np.any(u0):
        return np.zeros((n, m)), np.zeros(n)
    idof = (ops.interior[:, None] * m + np.arange(m)).ravel()
    Mi = ops.Md[idof][:, idof]
    Gi = ops.Gp[idof]
    mcol = sp.csr_matrix(ops.node_mass[:, None])
    A = sp.bmat([[Mi, Gi, None],
                 [-Gi.T, ops.J, mcol],
                 [None, mcol.T, None]], format="csc")
    b = np.concatenate([(ops.Md @ u0.ravel())[idof], np.zeros(n + 1)])
    x, _ = solve_general(A, b, tol=cfg.solver_tol, direct=True)
    u = np.zeros(n * m)
    u[idof] = x[: idof.size]
    p = x[idof.size: idof.size + n]
    p = p - (ops.node_mass @ p) / ops.node_mass.sum()
    return u.reshape(n, m), p


def director_step(state: SimState, cfg: SimConfig, mesh: TriMesh, ops=None, recover_w=None):
    """Solve for ``(d^{n+1}, w^{n+1})`` via the Schur complement of ``E_w``.

    Returns ``(d_next, w_next, report)``; ``w_next`` is ``None`` when
    recovery is switched off.
    """
    return _director_solve(state, cfg, mesh, ops, recover_w)[:3]


def _director_solve(state, cfg, mesh, ops, recover_w):
    ops = _ops(mesh, cfg, ops)
    recover_w = cfg.recover_w if recover_w is None else recover_w
    k = cfg.k
    D = state.d.ravel()
    G = fem.element_gradients(mesh, state.d)
    A = fem.stretch_operators(G, cfg.stretch_convention)
    T = fem.coupling_operator(A, cfg.beta)
    Einv = invert_blockdiag(fem.assemble_Ew(mesh, state.d, cfg.lam, cfg.beta, cfg.gamma, k, ops=A))
    Fw = fem.stretch_load(mesh, state.u, T).ravel()
    fload, _ = fem.penalty_terms(mesh, state.d, cfg.eps)
    F = ops.hf_coef * (ops.Md @ D) - fload.ravel()

    S = (ops.Ld + fem.assemble_schur_coupling(mesh, Einv) / k + ops.hf_coef * ops.Md).tocsr()
    rhs = ops.Mdw @ (Einv @ (ops.Mwd @ D / k - Fw)) + F
    D1, info = pcg(S, rhs, tol=cfg.solver_tol, x0=D)
    report = StepReport(director=info)
    W1 = None
    if recover_w:
        W1 = (Einv @ (ops.Mwd @ (D - D1) / k - Fw)).reshape(mesh.n_elems, cfg.dim)
    return D1.reshape(state.d.shape), W1, report, T


def _coupling(mesh, cfg, d):
    A = fem.stretch_operators(fem.element_gradients(mesh, d), cfg.stretch_convention)
    return fem.coupling_operator(A, cfg.beta)


def intermediate_velocity(state, w_next, cfg, mesh, T=None) -> np.ndarray:
    """Element averages of ``u~ = u^n + lam k T w^{n+1}``, shape ``(n_elems, 2)``."""
    T = _coupling(mesh, cfg, state.d) if T is None else T
    ubar = state.u[mesh.triangles].mean(axis=1)
    return ubar + cfg.lam * cfg.k * np.einsum("kij,kj->ki", T, w_next)


def pressure_step(state, d_next, w_next, cfg, mesh, ops=None, T=None):
    """Solve ``k (grad p, grad q) + j(p, q) = (u~, grad q)``; zero-mean ``p``.

    Returns ``(p_next, SolveInfo)``.
    """
    ops = _ops(mesh, cfg, ops)
    ut = intermediate_velocity(state, w_next, cfg, mesh, T)
    rhs = fem.p0_gradient_load(mesh, ut)
    rhs -= rhs.mean()  # exact compatibility with the constant kernel
    p, info = pcg(ops.P, rhs, tol=cfg.solver_tol, x0=state.p)
    p -= (ops.node_mass @ p) / ops.node_mass.sum()
    return p, info


def velocity_step(state, d_next, w_next, p_next, cfg, mesh, ops=None, T=None):
    """Convection-diffusion solve for each velocity component.

    Returns ``(u_next, [SolveInfo per component])``.
    """
    ops = _ops(mesh, cfg, ops)
    T = _coupling(mesh, cfg, state.d) if T is None else T
    k, m, n = cfg.k, cfg.dim, mesh.n_nodes
    idx = ops.interior
    C = fem.assemble_convection(mesh, state.u)
    A = (ops.Ms_int / k + C[idx][:, idx] + cfg.nu * ops.Ls_int).tocsc()
    forcing = cfg.lam * fem.p0_load(mesh, np.einsum("kij,kj->ki", T, w_next))
    rhs = (ops.Ms @ state.u) / k - (ops.Gp @ p_next).reshape(n, m) + forcing
    u = np.zeros((n, m))
    infos = []
    for c in range(m):
        x, info = solve_general(A, rhs[idx, c], tol=cfg.solver_tol)
        u[idx, c] = x
        infos.append(info)
    return u, infos


def step(state: SimState, cfg: SimConfig, mesh: TriMesh, ops=None):
    """Advance one time step; returns ``(new_state, StepReport)``."""
    ops = _ops(mesh, cfg, ops)
    d1, w1, report, T = _director_solve(state, cfg, mesh, ops, True)
    p1, report.pressure = pressure_step(state, d1, w1, cfg, mesh, ops, T)
    u1, report.velocity = velocity_step(state, d1, w1, p1, cfg, mesh, ops, T)
    new = SimState(u1, p1, d1, w1, state.t + cfg.k, state.step_index + 1)
    return new, report


@dataclass
class RunResult:
    state: SimState
    records: list
    stable: bool = True
    message: str = ""
    reports: list = field(default_factory=list)
    initial_state: SimState | None = None


def time_loop(cfg: SimConfig, preset=None, mesh: TriMesh | None = None, observer=None,
              initial_state: SimState | None = None) -> RunResult:
    """Run ``round(t_final / k)`` steps from the preset initial data.

    The run stops early and is flagged unstable once the total energy exceeds
    ``BLOWUP_FACTOR`` times its initial value or a field turns non-finite.
    ``observer(state, record)`` is called after the initial state and after
    every step.
    """
    from .diagnostics import compute_energies
    from .mesh import build_uniform_triangulation
    from .presets import build_preset_initial_data

    if mesh is None:
        mesh = build_uniform_triangulation(cfg.domain, cfg.nx, cfg.ny)
    ops = Operators(mesh, cfg)
    if initial_state is None:
        d0, u0, p0 = build_preset_initial_data(preset or cfg.preset, cfg, mesh, ops=ops)
        state = SimState(u0, p0, d0, None, 0.0, 0)
    else:
        state = initial_state.copy()
    first = compute_energies(state, cfg, mesh, ops)
    records = [first]
    result = RunResult(state, records, initial_state=state.copy())
    if observer is not None:
        observer(state, first)
    e0 = first.E_total
    for n in range(cfg.n_steps):
        try:
            new, report = step(state, cfg, mesh, ops)
        except (SolverError, np.linalg.LinAlgError) as exc:
            raise SimulationError(n + 1, exc) from exc
        if not new.is_finite():
            result.stable, result.message = False, f"non-finite field at step {n + 1}"
            break
        rec = compute_energies(new, cfg, mesh, ops)
        report.energy_before = records[-1].E_total
        report.energy_after = rec.E_total
        report.diss_u, report.diss_w = rec.diss_u, rec.diss_w
        records.append(rec)
        result.reports.append(report)
        state = new
        if observer is not None:
            observer(state, rec)
        if not np.isfinite(rec.E_total) or rec.E_total > BLOWUP_FACTOR * max(e0, 1e-300):
            result.stable = False
            result.message = f"energy blow-up at step {n + 1} (E = {rec.E_total:.3e})"
            break
    result.state = state
    if not result.stable:
        log.warning("run flagged unstable: %s", result.message)
    return result
