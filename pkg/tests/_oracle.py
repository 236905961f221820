"""Brute-force reference implementations used by the tests.

Nothing here calls into the assembly code.  Basis functions come from
inverting the affine Vandermonde matrix of each triangle, integrals from a
collapsed Gauss-Legendre product rule, and every global matrix is built
entry by entry in plain Python loops.
"""

from __future__ import annotations

import numpy as np


def duffy_rule(n=6):
    """Points ``(xi, eta)`` and weights on the reference triangle (weights sum to 1/2)."""
    g, w = np.polynomial.legendre.leggauss(n)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    pts, wts = [], []
    for a, wa in zip(g, w):
        for b, wb in zip(g, w):
            pts.append((a, b * (1.0 - a)))
            wts.append(wa * wb * (1.0 - a))
    return np.array(pts), np.array(wts)


class Element:
    """Affine P1 element with its own basis coefficients."""

    def __init__(self, xy):
        self.xy = np.asarray(xy, dtype=float)
        V = np.column_stack([np.ones(3), self.xy])
        self.coef = np.linalg.inv(V)  # phi_i(x, y) = [1, x, y] @ coef[:, i]
        e1, e2 = self.xy[1] - self.xy[0], self.xy[2] - self.xy[0]
        self.area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])

    def grad(self, i):
        return self.coef[1:, i]

    def phi(self, i, x):
        return self.coef[0, i] + self.coef[1:, i] @ x

    def points(self, n=6):
        ref, w = duffy_rule(n)
        x = self.xy[0] + ref[:, :1] * (self.xy[1] - self.xy[0]) + ref[:, 1:] * (self.xy[2] - self.xy[0])
        return x, w * 2.0 * self.area

    def integrate(self, fn, n=6):
        x, w = self.points(n)
        return sum(wq * fn(xq) for xq, wq in zip(x, w))


def elements(mesh):
    return [Element(mesh.vertices[t]) for t in mesh.triangles]


def mass(mesh):
    n = mesh.n_nodes
    A = np.zeros((n, n))
    for t, E in zip(mesh.triangles, elements(mesh)):
        for a in range(3):
            for b in range(3):
                A[t[a], t[b]] += E.integrate(lambda x: E.phi(a, x) * E.phi(b, x))
    return A


def stiffness(mesh):
    n = mesh.n_nodes
    A = np.zeros((n, n))
    for t, E in zip(mesh.triangles, elements(mesh)):
        for a in range(3):
            for b in range(3):
                A[t[a], t[b]] += E.integrate(lambda x: E.grad(a) @ E.grad(b))
    return A


def p1p0_mass(mesh, m=2):
    """Rows: P0 vector dofs ``(K, c)``, columns: P1 vector dofs ``(i, c)``."""
    A = np.zeros((mesh.n_elems * m, mesh.n_nodes * m))
    for K, (t, E) in enumerate(zip(mesh.triangles, elements(mesh))):
        for a in range(3):
            v = E.integrate(lambda x: E.phi(a, x))
            for c in range(m):
                A[K * m + c, t[a] * m + c] += v
    return A


def p0_mass(mesh, m=2):
    A = np.zeros((mesh.n_elems * m,) * 2)
    for K, E in enumerate(elements(mesh)):
        for c in range(m):
            A[K * m + c, K * m + c] = E.integrate(lambda x: 1.0)
    return A


def _grad_d(E, t, d, layout):
    """Matrix ``grad d`` on the element: ``[i, j] = d_j/dx_i`` (tgrad) or ``d_i/dx_j``."""
    J = np.zeros((2, 2))  # J[r, c] = d d_r / d x_c
    for a in range(3):
        J += np.outer(d[t[a]], E.grad(a))
    return J.T if layout == "tgrad" else J


def _stretch_vectors(E, t, d, w, convention):
    """``[grad d]^T w``, ``div(w d^T)`` and ``div(d w^T)`` for constant ``w``."""
    layout = "tgrad" if convention == "row_div_tgrad" else "plain"
    grad_d = _grad_d(E, t, d, layout)
    J = np.zeros((2, 2))
    for a in range(3):
        J += np.outer(d[t[a]], E.grad(a))
    # derivative tensor of the matrix fields A_ij(x): dA[i, j, l] = d A_ij / d x_l
    dA2 = np.einsum("i,jl->ijl", w, J)      # A = w d^T
    dA3 = np.einsum("il,j->ijl", J, w)      # A = d w^T
    if convention.startswith("row"):
        div2 = np.einsum("ijj->i", dA2)
        div3 = np.einsum("ijj->i", dA3)
    else:
        div2 = np.einsum("iji->j", dA2)
        div3 = np.einsum("iji->j", dA3)
    return grad_d.T @ w, div2, div3


def stretch_parts(mesh, d, lam, beta, k, convention="row_div_tgrad"):
    """Dense ``B*, B**, B***`` from their integral definitions."""
    m = 2
    ne = mesh.n_elems
    out = [np.zeros((ne * m, ne * m)) for _ in range(3)]
    coefs = (3 * lam * k, 3 * lam * beta ** 2 * k, 3 * lam * (1 + beta) ** 2 * k)
    basis = np.eye(m)
    for K, (t, E) in enumerate(zip(mesh.triangles, elements(mesh))):
        vecs = [_stretch_vectors(E, t, d, basis[c], convention) for c in range(m)]
        for a in range(m):
            for b in range(m):
                for s in range(3):
                    out[s][K * m + a, K * m + b] = coefs[s] * E.integrate(
                        lambda x: vecs[a][s] @ vecs[b][s])
    return out


def stretch_load(mesh, u, d, beta, convention="row_div_tgrad"):
    """``F_w`` with P0 test functions, shape ``(n_elems, 2)``."""
    out = np.zeros((mesh.n_elems, 2))
    basis = np.eye(2)
    for K, (t, E) in enumerate(zip(mesh.triangles, elements(mesh))):
        for c in range(2):
            v1, v2, v3 = _stretch_vectors(E, t, d, basis[c], convention)
            Tw = v1 - beta * v2 - (1 + beta) * v3

            def uh(x):
                return sum(E.phi(a, x) * u[t[a]] for a in range(3))

            out[K, c] = E.integrate(lambda x: uh(x) @ Tw)
    return out


def convection(mesh, u):
    """``c(u; phi_j, phi_i) = ((u.grad) phi_j, phi_i) + 1/2 (div u, phi_j phi_i)``."""
    n = mesh.n_nodes
    A = np.zeros((n, n))
    for t, E in zip(mesh.triangles, elements(mesh)):
        divu = sum(u[t[a]] @ E.grad(a) for a in range(3))

        def uh(x):
            return sum(E.phi(a, x) * u[t[a]] for a in range(3))

        for i in range(3):
            for j in range(3):
                A[t[i], t[j]] += E.integrate(
                    lambda x: (uh(x) @ E.grad(j)) * E.phi(i, x)
                    + 0.5 * divu * E.phi(j, x) * E.phi(i, x))
    return A


def pressure_stabilization(mesh, S, nu):
    n = mesh.n_nodes
    A = np.zeros((n, n))
    for t, E in zip(mesh.triangles, elements(mesh)):
        means = [E.integrate(lambda x: E.phi(a, x)) / E.area for a in range(3)]
        for i in range(3):
            for j in range(3):
                A[t[i], t[j]] += (S / nu) * E.integrate(
                    lambda x: (E.phi(i, x) - means[i]) * (E.phi(j, x) - means[j]))
    return A


def pressure_gradient(mesh, m=2):
    """Rows ``(i, c)`` of the velocity test function, columns pressure node ``j``."""
    n = mesh.n_nodes
    A = np.zeros((n * m, n))
    for t, E in zip(mesh.triangles, elements(mesh)):
        for i in range(3):
            for j in range(3):
                for c in range(m):
                    A[t[i] * m + c, t[j]] += E.integrate(lambda x: E.grad(j)[c] * E.phi(i, x))
    return A


def penalty_load_inside(mesh, d, eps):
    """``((|d|^2 - 1) d / eps^2, phi_i)``, exact while ``|d_h| <= 1`` everywhere."""
    out = np.zeros((mesh.n_nodes, 2))
    for t, E in zip(mesh.triangles, elements(mesh)):
        def dh(x):
            return sum(E.phi(a, x) * d[t[a]] for a in range(3))

        for i in range(3):
            for c in range(2):
                out[t[i], c] += E.integrate(
                    lambda x: (dh(x) @ dh(x) - 1.0) * dh(x)[c] / eps ** 2 * E.phi(i, x))
    return out


def monolithic_director(state, cfg, mesh):
    """Dense solve of the coupled (D, W) system built from the brute-force matrices.

    The penalty load is the only ingredient taken from the package (it is
    not polynomial outside the unit ball, so the tensor rule here would not
    reproduce it exactly).
    """
    from nemflow import fem

    k, m = cfg.k, 2
    Mwd = p1p0_mass(mesh, m)
    E = sum(stretch_parts(mesh, state.d, cfg.lam, cfg.beta, k, cfg.stretch_convention))
    E = E + cfg.gamma * p0_mass(mesh, m)
    Md = np.kron(mass(mesh), np.eye(m))
    Ld = np.kron(stiffness(mesh), np.eye(m))
    Fw = stretch_load(mesh, state.u, state.d, cfg.beta, cfg.stretch_convention).ravel()
    hf = cfg.hf_value / (2 * cfg.eps ** 2)
    pen, _ = fem.penalty_terms(mesh, state.d, cfg.eps)
    Dn = state.d.ravel()
    F = hf * Md @ Dn - pen.ravel()
    nd = Dn.size
    A = np.block([[Mwd / k, E], [Ld + hf * Md, -Mwd.T]])
    b = np.concatenate([Mwd @ Dn / k - Fw, F])
    x = np.linalg.solve(A, b)
    return x[:nd].reshape(-1, 2), x[nd:].reshape(-1, 2)
