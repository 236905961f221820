import numpy as np
import pytest

from nemflow.mesh import build_uniform_triangulation, from_arrays


def perturbed_mesh(seed=0, nx=2, ny=2, amp=0.12):
    """Uniform mesh of the unit square with interior vertices jittered."""
    base = build_uniform_triangulation((0.0, 1.0, 0.0, 1.0), nx, ny)
    rng = np.random.default_rng(seed)
    v = base.vertices.copy()
    inner = base.interior_nodes
    v[inner] += amp * rng.uniform(-1, 1, (inner.size, 2)) / max(nx, ny)
    return from_arrays(v, base.triangles, base.boundary_nodes)


def two_element_mesh():
    v = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    return from_arrays(v, [[0, 1, 2], [0, 2, 3]])


@pytest.fixture(params=["two", "uniform", "perturbed"])
def small_mesh(request):
    if request.param == "two":
        return two_element_mesh()
    if request.param == "uniform":
        return build_uniform_triangulation((0.0, 1.0, 0.0, 1.0), 2, 2)
    return perturbed_mesh()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
