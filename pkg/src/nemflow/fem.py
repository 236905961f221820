"""P1 / P0 finite element matrices and loads on a :class:`~nemflow.mesh.TriMesh`.

Vector-valued P1 coefficients are interleaved by node (``dof = node * m + c``)
and P0 coefficients by element (``dof = elem * m + c``), matching
``field.reshape(-1)`` for arrays of shape ``(n, m)``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .linalg import BlockDiagMatrix
from .mesh import TriMesh

# Dunavant degree-4 rule, six interior points
_D4_A1, _D4_W1 = 0.44594849091596488631832925388305, 0.22338158967801146569500700843312
_D4_A2, _D4_W2 = 0.091576213509770743459571463402202, 0.10995174365532186763832632490021

STRETCH_CONVENTIONS = ("row_div_tgrad", "row_div", "col_div")


def quadrature_rule(order: int):
    """Barycentric points ``(nq, 3)`` and weights ``(nq,)`` summing to one."""
    if order == 1:
        return np.full((1, 3), 1.0 / 3.0), np.ones(1)
    if order == 2:
        a, b = 2.0 / 3.0, 1.0 / 6.0
        pts = np.array([[a, b, b], [b, a, b], [b, b, a]])
        return pts, np.full(3, 1.0 / 3.0)
    if order == 4:
        pts, wts = [], []
        for a, w in ((_D4_A1, _D4_W1), (_D4_A2, _D4_W2)):
            c = 1.0 - 2.0 * a
            pts += [[c, a, a], [a, c, a], [a, a, c]]
            wts += [w] * 3
        return np.array(pts), np.array(wts)
    raise ValueError(f"unsupported quadrature order {order}; choose 1, 2 or 4")


def _scalar_coo(mesh: TriMesh, local: np.ndarray, shape=None) -> sp.csr_matrix:
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_nodes
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape or (n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def local_mass(mesh: TriMesh) -> np.ndarray:
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return mesh.element_areas[:, None, None] * ref


def assemble_mass_P1(mesh: TriMesh) -> sp.csr_matrix:
    """Scalar P1 mass matrix."""
    return _scalar_coo(mesh, local_mass(mesh))


def assemble_stiffness_P1(mesh: TriMesh) -> sp.csr_matrix:
    """Scalar P1 stiffness (Neumann) matrix."""
    g = mesh.element_gradients
    local = np.einsum("kic,kjc->kij", g, g) * mesh.element_areas[:, None, None]
    return _scalar_coo(mesh, local)


def vector_expand(A, m: int = 2) -> sp.csr_matrix:
    """Component-diagonal expansion ``A kron I_m`` for interleaved vector dofs."""
    return sp.kron(A, sp.identity(m), format="csr")


def assemble_P1P0_mass(mesh: TriMesh, m: int = 2) -> sp.csr_matrix:
    """P0-by-P1 vector mass matrix, shape ``(n_elems*m, n_nodes*m)``.

    Entry ``(K, c; i, c)`` equals ``|K| / 3`` for each vertex ``i`` of ``K``.
    The transpose is the P1-by-P0 matrix.
    """
    ne, t = mesh.n_elems, mesh.triangles
    rows = (np.arange(ne)[:, None, None] * m + np.arange(m)[None, None, :])
    rows = np.broadcast_to(rows, (ne, 3, m))
    cols = t[:, :, None] * m + np.arange(m)[None, None, :]
    vals = np.broadcast_to((mesh.element_areas / 3.0)[:, None, None], (ne, 3, m))
    A = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())),
                      shape=(ne * m, mesh.n_nodes * m)).tocsr()
    A.sort_indices()
    return A


def assemble_P0_mass(mesh: TriMesh, m: int = 2) -> BlockDiagMatrix:
    return BlockDiagMatrix(mesh.element_areas[:, None, None] * np.eye(m))


def element_gradients(mesh: TriMesh, f: np.ndarray) -> np.ndarray:
    """Constant Jacobian ``G[K, r, c] = d f_r / d x_c`` of a P1 field per element."""
    f = np.ascontiguousarray(f, dtype=float)
    return _kernels.K.element_gradients(mesh.triangles, mesh.element_gradients, f)


def stretch_operators(G: np.ndarray, convention: str = "row_div_tgrad"):
    """Per-element matrices ``(A1, A2, A3)`` of the three coupling operators.

    For a piecewise-constant ``w`` and the director Jacobian ``G``:

    * ``A1 w``: the transport operator ``(grad d)^T w``
    * ``A2 w``: ``div(w d^T)`` with broken derivatives
    * ``A3 w``: ``div(d w^T)`` with broken derivatives

    ``convention`` fixes how ``grad d`` is laid out and along which index
    the divergence of a matrix is taken:

    ``row_div_tgrad``
        ``grad d`` stored as ``G^T`` and row-wise divergence:
        ``A1 = G, A2 = tr(G) I, A3 = G``.
    ``row_div``
        ``grad d = G`` and row-wise divergence:
        ``A1 = G^T, A2 = tr(G) I, A3 = G``.
    ``col_div``
        ``grad d = G`` and column-wise divergence:
        ``A1 = G^T, A2 = G, A3 = tr(G) I``.
    """
    m = G.shape[1]
    GT = np.swapaxes(G, 1, 2)
    trI = np.trace(G, axis1=1, axis2=2)[:, None, None] * np.eye(m)
    if convention == "row_div_tgrad":
        return G, trI, G
    if convention == "row_div":
        return GT, trI, G
    if convention == "col_div":
        return GT, G, trI
    raise ValueError(f"unknown stretch convention {convention!r}; expected one of {STRETCH_CONVENTIONS}")


def coupling_operator(ops, beta: float) -> np.ndarray:
    """``T = A1 - beta A2 - (1 + beta) A3`` per element."""
    a1, a2, a3 = ops
    return a1 - beta * a2 - (1.0 + beta) * a3


def assemble_Ew_parts(mesh, d, lam, beta, k, convention="row_div_tgrad"):
    """The three stretching block matrices ``(B*, B**, B***)`` separately."""
    ops = stretch_operators(element_gradients(mesh, d), convention)
    coefs = (3 * lam * k, 3 * lam * beta ** 2 * k, 3 * lam * (1 + beta) ** 2 * k)
    zero = np.zeros_like(ops[0])
    parts = []
    for idx, c in enumerate(coefs):
        sel = [zero, zero, zero]
        sel[idx] = ops[idx]
        cs = [0.0, 0.0, 0.0]
        cs[idx] = c
        blocks = _kernels.K.ew_blocks(mesh.element_areas, *[np.ascontiguousarray(s) for s in sel],
                                      cs[0], cs[1], cs[2], 0.0)
        parts.append(BlockDiagMatrix(blocks))
    return tuple(parts)


def assemble_Ew(mesh, d, lam, beta, gamma, k, convention="row_div_tgrad", ops=None) -> BlockDiagMatrix:
    """``E_w = B* + B** + B*** + gamma M_w`` as one block per element."""
    if ops is None:
        ops = stretch_operators(element_gradients(mesh, d), convention)
    a1, a2, a3 = (np.ascontiguousarray(a) for a in ops)
    blocks = _kernels.K.ew_blocks(mesh.element_areas, a1, a2, a3,
                                  3 * lam * k, 3 * lam * beta ** 2 * k,
                                  3 * lam * (1 + beta) ** 2 * k, float(gamma))
    return BlockDiagMatrix(blocks)


def assemble_schur_coupling(mesh: TriMesh, Einv: BlockDiagMatrix) -> sp.csr_matrix:
    """``M_dw E_w^{-1} M_wd`` assembled element by element."""
    m = Einv.block_size
    rows, cols, vals = _kernels.K.schur_coo(mesh.triangles, mesh.element_areas, Einv.blocks)
    n = mesh.n_nodes * m
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return A


def assemble_convection(mesh: TriMesh, u: np.ndarray) -> sp.csr_matrix:
    """Scalar matrix of ``c(u; v, w) = ((u.grad) v, w) + 1/2 (div u, v w)``.

    Row index = test function, column = trial.  Integrals are exact for P1 data.
    """
    u = np.ascontiguousarray(u, dtype=float)
    local = _kernels.K.convection_local(mesh.triangles, mesh.element_areas,
                                        mesh.element_gradients, u)
    return _scalar_coo(mesh, local)


def assemble_pressure_gradient(mesh: TriMesh, m: int = 2) -> sp.csr_matrix:
    """Matrix mapping P1 ``p`` to ``((grad p)_c, phi_i)``, shape ``(n*m, n)``."""
    t, g, a = mesh.triangles, mesh.element_gradients, mesh.element_areas
    ne, n = mesh.n_elems, mesh.n_nodes
    # entry (i, c; j) = |K|/3 * dphi_j/dx_c
    vals = (a[:, None, None, None] / 3.0) * np.broadcast_to(
        np.swapaxes(g, 1, 2)[:, None, :, :], (ne, 3, m, 3))
    rows = np.broadcast_to((t[:, :, None] * m + np.arange(m))[:, :, :, None], (ne, 3, m, 3))
    cols = np.broadcast_to(t[:, None, None, :], (ne, 3, m, 3))
    A = sp.coo_matrix((vals.ravel(), (rows.ravel(), cols.ravel())), shape=(n * m, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_pressure_stabilization(mesh: TriMesh, S: float, nu: float) -> sp.csr_matrix:
    """``(S/nu) (p - pi0 p, q - pi0 q)`` with ``pi0`` the L2 projection onto P0."""
    ref = (np.ones((3, 3)) + np.eye(3)) / 12.0 - 1.0 / 9.0
    local = (S / nu) * mesh.element_areas[:, None, None] * ref
    return _scalar_coo(mesh, local)


def stretch_load(mesh: TriMesh, u: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``F_w[K] = int_K T_K^T u``, shape ``(n_elems, m)``."""
    ubar = _kernels.K.element_means(mesh.triangles, np.ascontiguousarray(u, dtype=float))
    return mesh.element_areas[:, None] * np.einsum("kji,kj->ki", T, ubar)


def p0_load(mesh: TriMesh, v: np.ndarray) -> np.ndarray:
    """``(v, phi_i)`` for piecewise-constant ``v`` of shape ``(n_elems, m)``."""
    el = np.repeat((mesh.element_areas[:, None] / 3.0 * v)[:, None, :], 3, axis=1)
    return _kernels.K.scatter(mesh.triangles, el, mesh.n_nodes)


def p0_gradient_load(mesh: TriMesh, v: np.ndarray) -> np.ndarray:
    """``(v, grad phi_i)`` for piecewise-constant vector ``v``; shape ``(n_nodes,)``."""
    el = mesh.element_areas[:, None] * np.einsum("kic,kc->ki", mesh.element_gradients, v)
    return _kernels.K.scatter(mesh.triangles, el, mesh.n_nodes)


def penalty_terms(mesh: TriMesh, d: np.ndarray, eps: float, order: int = 4):
    """``((f~(d), phi_i), int F~(d))`` with the given quadrature rule."""
    qb, qw = quadrature_rule(order)
    load, energy = _kernels.K.penalty(mesh.triangles, mesh.element_areas,
                                      np.ascontiguousarray(d, dtype=float),
                                      1.0 / eps ** 2, qb, qw)
    return _kernels.K.scatter(mesh.triangles, load, mesh.n_nodes), float(energy.sum())


def integrate(mesh: TriMesh, fn, order: int = 4) -> float:
    """Integrate a callable ``fn(x, y)`` (vectorised) over the mesh."""
    qb, qw = quadrature_rule(order)
    p = mesh.vertices[mesh.triangles]  # (ne, 3, 2)
    xq = np.einsum("qi,kic->kqc", qb, p)
    vals = fn(xq[..., 0], xq[..., 1])
    return float(np.sum(vals * qw[None, :] * mesh.element_areas[:, None]))


def _segment_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from the origin to the segments ``[a, b]`` (row-wise)."""
    ab = b - a
    den = np.einsum("ij,ij->i", ab, ab)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(den > 0, -np.einsum("ij,ij->i", a, ab) / den, 0.0)
    s = np.clip(s, 0.0, 1.0)
    return np.linalg.norm(a + s[:, None] * ab, axis=1)


def min_norm_p1(mesh: TriMesh, d: np.ndarray) -> float:
    """Exact minimum of ``|d_h|`` over the domain for a P1 field with two components.

    Unlike the nodal minimum this sees a zero of the interpolant inside an
    element, i.e. a defect whose core is narrower than the mesh.
    """
    d = np.asarray(d, dtype=float)
    if d.shape[1] != 2:
        raise ValueError("min_norm_p1 needs a two-component field")
    v = d[mesh.triangles]                      # (ne, 3, 2)
    B = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
    det = B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]
    inside = np.zeros(len(det), dtype=bool)
    ok = np.abs(det) > 1e-300
    if ok.any():
        st = np.linalg.solve(B[ok], -v[ok, 0][..., None])[..., 0]
        inside[ok] = (st[:, 0] >= 0) & (st[:, 1] >= 0) & (st.sum(axis=1) <= 1)
    if inside.any():
        return 0.0
    edge = np.minimum.reduce([_segment_distance(v[:, i], v[:, j])
                              for i, j in ((0, 1), (1, 2), (2, 0))])
    return float(edge.min())
