import numpy as np
import pytest
import scipy.sparse as sp

from nemflow._kernels import SingularBlockError
from nemflow.linalg import BlockDiagMatrix, SolverError, pcg, solve_general


def spd(n, rng):
    A = sp.random(n, n, density=0.2, random_state=np.random.RandomState(0))
    return (A @ A.T + n * sp.identity(n)).tocsr()


def test_pcg_solves_spd(rng):
    A = spd(60, rng)
    b = rng.standard_normal(60)
    x, info = pcg(A, b, tol=1e-12)
    assert np.linalg.norm(A @ x - b) <= 1e-12 * np.linalg.norm(b) * 10
    assert info.method == "cg" and info.iterations > 0


def test_pcg_zero_rhs_and_errors(rng):
    A = spd(5, rng)
    x, info = pcg(A, np.zeros(5))
    assert not x.any() and info.iterations == 0
    with pytest.raises(SolverError):
        pcg(-A, np.ones(5))
    with pytest.raises(SolverError):
        pcg(A, rng.standard_normal(5), tol=1e-30, maxiter=1)


def test_general_direct_and_iterative(rng):
    n = 500
    A = (spd(n, rng) + sp.random(n, n, density=0.01, random_state=np.random.RandomState(1))).tocsr()
    b = rng.standard_normal(n)
    x1, i1 = solve_general(A, b, direct=True)
    x2, i2 = solve_general(A, b, tol=1e-12)
    assert i1.method == "lu" and i2.method == "bicgstab"
    assert np.allclose(x1, x2, atol=1e-9)


def test_blockdiag(rng):
    blocks = rng.standard_normal((4, 2, 2)) + 3 * np.eye(2)
    B = BlockDiagMatrix(blocks)
    x = rng.standard_normal(8)
    assert np.allclose(B @ x, B.toarray() @ x)
    assert np.allclose(B.inverse().toarray(), np.linalg.inv(B.toarray()))
    assert B.shape == (8, 8) and B.n_blocks == 4 and B.block_size == 2
    with pytest.raises(ValueError):
        BlockDiagMatrix(np.zeros((2, 2, 3)))
    with pytest.raises(SingularBlockError):
        BlockDiagMatrix(np.zeros((1, 2, 2))).inverse()
