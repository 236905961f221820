"""Element-loop kernels with a numba path and a vectorised numpy path.

The numba path is used when numba imports and ``NEMFLOW_DISABLE_NUMBA`` is
unset (or ``0``).  Both paths share signatures and are tested against each
other; ``NUMPY`` and ``NUMBA`` expose them explicitly.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_DISABLED = os.environ.get("NEMFLOW_DISABLE_NUMBA", "0").lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    import numba
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAS_NUMBA = False


class SingularBlockError(np.linalg.LinAlgError):
    def __init__(self, element: int):
        super().__init__(f"singular block at element {element}")
        self.element = element


# ---------------------------------------------------------------------------
# numpy implementations


def _np_element_gradients(tri, grads, f):
    # G[K, r, c] = sum_i f[tri[K, i], r] * dphi_i/dx_c
    return np.einsum("kir,kic->krc", f[tri], grads)


def _np_element_means(tri, f):
    return f[tri].mean(axis=1)


def _np_ew_blocks(areas, a1, a2, a3, c1, c2, c3, gamma):
    m = a1.shape[1]
    blk = (c1 * np.einsum("kji,kjl->kil", a1, a1)
           + c2 * np.einsum("kji,kjl->kil", a2, a2)
           + c3 * np.einsum("kji,kjl->kil", a3, a3)
           + gamma * np.eye(m))
    return blk * areas[:, None, None]


def _np_invert_blocks(blocks):
    try:
        inv = np.linalg.inv(blocks)
    except np.linalg.LinAlgError:
        for e, b in enumerate(blocks):
            if not np.isfinite(np.linalg.cond(b)) or abs(np.linalg.det(b)) == 0.0:
                raise SingularBlockError(e) from None
        raise
    bad = ~np.isfinite(inv).all(axis=(1, 2))
    if bad.any():
        raise SingularBlockError(int(np.flatnonzero(bad)[0]))
    return inv


def _np_schur_coo(tri, areas, einv):
    ne, m = einv.shape[0], einv.shape[1]
    w = (areas / 3.0) ** 2
    dofs = (tri[:, :, None] * m + np.arange(m)[None, None, :]).reshape(ne, 3 * m)
    # local (3m x 3m) = ones(3, 3) kron einv
    loc = w[:, None, None, None, None] * np.broadcast_to(
        einv[:, None, :, None, :], (ne, 3, m, 3, m))
    rows = np.repeat(dofs, 3 * m, axis=1).ravel()
    cols = np.tile(dofs, (1, 3 * m)).ravel()
    return rows, cols, loc.reshape(ne, -1).ravel()


def _np_convection_local(tri, areas, grads, u):
    ue = u[tri]  # (ne, 3, m)
    # int_K u phi_i = |K|/12 (sum_l u_l + u_i)
    uphi = (ue.sum(axis=1)[:, None, :] + ue) * (areas[:, None, None] / 12.0)
    adv = np.einsum("kim,kjm->kij", uphi, grads)
    div = np.einsum("kim,kim->k", ue, grads)
    mass = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return adv + 0.5 * (div * areas)[:, None, None] * mass


def _np_penalty(tri, areas, d, inv_eps2, qbary, qw):
    # values of d at quadrature points: (ne, nq, m)
    dq = np.einsum("qi,kim->kqm", qbary, d[tri])
    r2 = np.einsum("kqm,kqm->kq", dq, dq)
    r = np.sqrt(r2)
    inside = r <= 1.0
    safe_r = np.where(inside, 1.0, r)
    fval = inv_eps2 * np.where(inside, 0.25 * (r2 - 1.0) ** 2, (r - 1.0) ** 2)
    coef = inv_eps2 * np.where(inside, r2 - 1.0, 2.0 * (r - 1.0) / safe_r)
    fq = coef[..., None] * dq
    wk = qw[None, :] * areas[:, None]  # (ne, nq)
    load = np.einsum("kq,qi,kqm->kim", wk, qbary, fq)
    energy = (wk * fval).sum(axis=1)
    return load, energy


def _np_scatter(tri, elvec, n):
    out = np.zeros((n,) + elvec.shape[2:])
    np.add.at(out, tri.ravel(), elvec.reshape((-1,) + elvec.shape[2:]))
    return out


NUMPY = SimpleNamespace(
    element_gradients=_np_element_gradients,
    element_means=_np_element_means,
    ew_blocks=_np_ew_blocks,
    invert_blocks=_np_invert_blocks,
    schur_coo=_np_schur_coo,
    convection_local=_np_convection_local,
    penalty=_np_penalty,
    scatter=_np_scatter,
    name="numpy",
)


# ---------------------------------------------------------------------------
# numba implementations

if HAS_NUMBA:

    @njit(cache=True)
    def _nb_element_gradients(tri, grads, f):
        ne = tri.shape[0]
        m = f.shape[1]
        out = np.zeros((ne, m, 2))
        for k in range(ne):
            for i in range(3):
                n = tri[k, i]
                for r in range(m):
                    for c in range(2):
                        out[k, r, c] += f[n, r] * grads[k, i, c]
        return out

    @njit(cache=True)
    def _nb_element_means(tri, f):
        ne = tri.shape[0]
        m = f.shape[1]
        out = np.empty((ne, m))
        for k in range(ne):
            for r in range(m):
                out[k, r] = (f[tri[k, 0], r] + f[tri[k, 1], r] + f[tri[k, 2], r]) / 3.0
        return out

    @njit(cache=True)
    def _nb_ew_blocks(areas, a1, a2, a3, c1, c2, c3, gamma):
        ne, m = a1.shape[0], a1.shape[1]
        out = np.zeros((ne, m, m))
        for k in range(ne):
            for i in range(m):
                for l in range(m):
                    s = 0.0
                    for j in range(m):
                        s += (c1 * a1[k, j, i] * a1[k, j, l]
                              + c2 * a2[k, j, i] * a2[k, j, l]
                              + c3 * a3[k, j, i] * a3[k, j, l])
                    if i == l:
                        s += gamma
                    out[k, i, l] = s * areas[k]
        return out

    @njit(cache=True)
    def _nb_gauss_jordan(blocks):
        ne, m = blocks.shape[0], blocks.shape[1]
        out = np.empty_like(blocks)
        a = np.empty((m, 2 * m))
        for k in range(ne):
            scale = 0.0
            for i in range(m):
                for j in range(m):
                    a[i, j] = blocks[k, i, j]
                    a[i, m + j] = 1.0 if i == j else 0.0
                    scale = max(scale, abs(blocks[k, i, j]))
            for c in range(m):
                p = c
                for r in range(c + 1, m):
                    if abs(a[r, c]) > abs(a[p, c]):
                        p = r
                piv = a[p, c]
                if not (abs(piv) > 1e-300 and abs(piv) > 1e-15 * scale):
                    return out, k
                if p != c:
                    for j in range(2 * m):
                        a[c, j], a[p, j] = a[p, j], a[c, j]
                for j in range(2 * m):
                    a[c, j] /= piv
                for r in range(m):
                    if r != c:
                        f = a[r, c]
                        if f != 0.0:
                            for j in range(2 * m):
                                a[r, j] -= f * a[c, j]
            for i in range(m):
                for j in range(m):
                    out[k, i, j] = a[i, m + j]
        return out, -1

    def _nb_invert_blocks(blocks):
        out, bad = _nb_gauss_jordan(np.ascontiguousarray(blocks, dtype=np.float64))
        if bad >= 0:
            raise SingularBlockError(int(bad))
        return out

    @njit(cache=True)
    def _nb_schur_coo(tri, areas, einv):
        ne, m = einv.shape[0], einv.shape[1]
        nloc = (3 * m) * (3 * m)
        rows = np.empty(ne * nloc, dtype=np.int64)
        cols = np.empty(ne * nloc, dtype=np.int64)
        vals = np.empty(ne * nloc)
        pos = 0
        for k in range(ne):
            w = (areas[k] / 3.0) ** 2
            for a in range(3):
                for i in range(m):
                    ra = tri[k, a] * m + i
                    for b in range(3):
                        for j in range(m):
                            rows[pos] = ra
                            cols[pos] = tri[k, b] * m + j
                            vals[pos] = w * einv[k, i, j]
                            pos += 1
        return rows, cols, vals

    @njit(cache=True)
    def _nb_convection_local(tri, areas, grads, u):
        ne, m = tri.shape[0], u.shape[1]
        out = np.empty((ne, 3, 3))
        uphi = np.empty((3, m))
        for k in range(ne):
            div = 0.0
            for c in range(m):
                s = u[tri[k, 0], c] + u[tri[k, 1], c] + u[tri[k, 2], c]
                for i in range(3):
                    uphi[i, c] = (s + u[tri[k, i], c]) * areas[k] / 12.0
                    div += u[tri[k, i], c] * grads[k, i, c]
            for i in range(3):
                for j in range(3):
                    adv = 0.0
                    for c in range(m):
                        adv += uphi[i, c] * grads[k, j, c]
                    mass = (2.0 if i == j else 1.0) / 12.0
                    out[k, i, j] = adv + 0.5 * div * areas[k] * mass
        return out

    @njit(cache=True)
    def _nb_penalty(tri, areas, d, inv_eps2, qbary, qw):
        ne, m = tri.shape[0], d.shape[1]
        nq = qw.shape[0]
        load = np.zeros((ne, 3, m))
        energy = np.zeros(ne)
        dq = np.empty(m)
        for k in range(ne):
            for q in range(nq):
                r2 = 0.0
                for c in range(m):
                    v = 0.0
                    for i in range(3):
                        v += qbary[q, i] * d[tri[k, i], c]
                    dq[c] = v
                    r2 += v * v
                r = np.sqrt(r2)
                if r <= 1.0:
                    fval = 0.25 * (r2 - 1.0) ** 2
                    coef = r2 - 1.0
                else:
                    fval = (r - 1.0) ** 2
                    coef = 2.0 * (r - 1.0) / r
                wq = qw[q] * areas[k]
                energy[k] += wq * inv_eps2 * fval
                for i in range(3):
                    for c in range(m):
                        load[k, i, c] += wq * qbary[q, i] * inv_eps2 * coef * dq[c]
        return load, energy

    @njit(cache=True)
    def _nb_scatter2(tri, elvec, n):
        m = elvec.shape[2]
        out = np.zeros((n, m))
        for k in range(tri.shape[0]):
            for i in range(3):
                for c in range(m):
                    out[tri[k, i], c] += elvec[k, i, c]
        return out

    def _nb_scatter(tri, elvec, n):
        if elvec.ndim == 2:
            return _nb_scatter2(tri, elvec[:, :, None], n)[:, 0]
        return _nb_scatter2(tri, np.ascontiguousarray(elvec), n)

    NUMBA = SimpleNamespace(
        element_gradients=_nb_element_gradients,
        element_means=_nb_element_means,
        ew_blocks=_nb_ew_blocks,
        invert_blocks=_nb_invert_blocks,
        schur_coo=_nb_schur_coo,
        convection_local=_nb_convection_local,
        penalty=_nb_penalty,
        scatter=_nb_scatter,
        name="numba",
    )
else:  # pragma: no cover
    NUMBA = None

K = NUMBA if HAS_NUMBA else NUMPY
