"""Sparse solvers and the element block-diagonal matrix type."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels

DIRECT_SIZE_LIMIT = 400


class SolverError(RuntimeError):
    """Linear solve failed to converge or broke down."""

    def __init__(self, msg, residual=np.nan, iterations=0):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


@dataclass
class SolveInfo:
    iterations: int = 0
    residual: float = 0.0
    method: str = ""


class BlockDiagMatrix:
    """One dense ``m x m`` block per mesh element.

    Vectors are stored element-major: ``x.reshape(n_elems, m)``.
    """

    def __init__(self, blocks):
        self.blocks = np.ascontiguousarray(blocks, dtype=float)
        if self.blocks.ndim != 3 or self.blocks.shape[1] != self.blocks.shape[2]:
            raise ValueError("blocks must have shape (n, m, m)")

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_size(self) -> int:
        return self.blocks.shape[1]

    @property
    def shape(self):
        n = self.n_blocks * self.block_size
        return (n, n)

    def __matmul__(self, x):
        x = np.asarray(x)
        if isinstance(x, np.ndarray) and x.ndim == 1:
            y = np.einsum("kij,kj->ki", self.blocks, x.reshape(self.n_blocks, -1))
            return y.ravel()
        y = np.einsum("kij,kj->ki", self.blocks, x)
        return y

    def dot(self, x):
        return self @ x

    def inverse(self) -> "BlockDiagMatrix":
        return invert_blockdiag(self)

    def tocsr(self) -> sp.csr_matrix:
        return sp.block_diag(list(self.blocks), format="csr")

    def toarray(self) -> np.ndarray:
        return self.tocsr().toarray()


def invert_blockdiag(E: BlockDiagMatrix) -> BlockDiagMatrix:
    """Invert every block by Gauss-Jordan elimination with partial pivoting.

    Raises
    ------
    _kernels.SingularBlockError
        With the offending element index in ``.element``.
    """
    return BlockDiagMatrix(_kernels.K.invert_blocks(E.blocks))


def pcg(A, b, tol=1e-10, maxiter=None, x0=None):
    """Jacobi-preconditioned conjugate gradients.

    Returns ``(x, SolveInfo)``.  Stops once ``|b - A x| <= tol * |b|``.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    maxiter = 10 * n if maxiter is None else maxiter
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveInfo(0, 0.0, "cg")
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("matrix is not positive definite (non-positive diagonal)")
    dinv = 1.0 / diag
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = dinv * r
    p = z.copy()
    rz = r @ z
    target = tol * bnorm
    res = np.linalg.norm(r)
    it = 0
    while res > target:
        if it >= maxiter:
            raise SolverError(f"CG did not converge in {maxiter} iterations "
                              f"(relative residual {res / bnorm:.3e})", res / bnorm, it)
        Ap = A @ p
        pAp = p @ Ap
        if not pAp > 0.0:
            raise SolverError(f"CG breakdown: p'Ap = {pAp:.3e} (matrix not SPD)", res / bnorm, it)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = dinv * r
        rz_new = r @ z
        p *= rz_new / rz
        p += z
        rz = rz_new
        res = np.linalg.norm(r)
        it += 1
    # the recursive residual can drift; report the true one
    res = np.linalg.norm(b - A @ x) / bnorm
    return x, SolveInfo(it, float(res), "cg")


def sparse_solve_spd(A, b, tol=1e-10, maxiter=None):
    """Solve an SPD system with :func:`pcg`."""
    return pcg(A, b, tol=tol, maxiter=maxiter)[0]


def solve_general(A, b, tol=1e-10, maxiter=None, direct=None):
    """Nonsymmetric solve; returns ``(x, SolveInfo)``.

    Systems with at most ``DIRECT_SIZE_LIMIT`` unknowns (or ``direct=True``)
    are factorised directly, larger ones go through Jacobi-preconditioned
    BiCGStab.
    """
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n), SolveInfo(0, 0.0, "trivial")
    if direct or (direct is None and n <= DIRECT_SIZE_LIMIT):
        try:
            with np.errstate(all="raise"):
                x = spla.splu(A).solve(b)
        except (RuntimeError, FloatingPointError) as exc:
            raise SolverError(f"direct solve failed: {exc}") from exc
        res = np.linalg.norm(b - A @ x) / bnorm
        if not np.isfinite(res) or res > max(tol, 1e-8):
            raise SolverError(f"direct solve inaccurate (relative residual {res:.3e})", res)
        return x, SolveInfo(1, float(res), "lu")

    diag = A.diagonal()
    if np.any(diag == 0.0):
        raise SolverError("zero on the diagonal; Jacobi preconditioner undefined")
    prec = spla.LinearOperator((n, n), matvec=lambda v: v / diag)
    maxiter = 10 * n if maxiter is None else maxiter
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.bicgstab(A, b, rtol=tol, atol=0.0, M=prec, maxiter=maxiter, callback=cb)
    res = np.linalg.norm(b - A @ x) / bnorm
    if info != 0 or not np.isfinite(res) or res > 10 * tol:
        raise SolverError(f"BiCGStab failed (info={info}, relative residual {res:.3e})",
                          res, count[0])
    return x, SolveInfo(count[0], float(res), "bicgstab")


def sparse_solve_general(A, b, tol=1e-10, maxiter=None):
    return solve_general(A, b, tol=tol, maxiter=maxiter)[0]
