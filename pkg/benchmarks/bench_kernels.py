"""Compare the numba kernels with the pure-numpy fallback.

Runs every element kernel on both backends for a few mesh sizes, checks that
the outputs agree, and reports the best-of-N wall time.  With ``--steps`` it
also times whole time steps in two subprocesses, one with
``NEMFLOW_DISABLE_NUMBA=1``.

    python3 benchmarks/bench_kernels.py --sizes 32,64,128 --repeat 5 --steps 50
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from nemflow import _kernels, fem
from nemflow.mesh import build_uniform_triangulation


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def kernel_cases(mesh, rng):
    tri, areas, grads = mesh.triangles, mesh.element_areas, mesh.element_gradients
    n = mesh.n_nodes
    d = rng.standard_normal((n, 2))
    u = rng.standard_normal((n, 2))
    G = _kernels.NUMPY.element_gradients(tri, grads, d)
    ops = fem.stretch_operators(G, "row_div_tgrad")
    c = (3.0 * 1e-3, 3.0 * 1e-3, 0.0)
    blocks = _kernels.NUMPY.ew_blocks(areas, *ops, *c, 1.0)
    einv = _kernels.NUMPY.invert_blocks(blocks)
    qbary, qw = fem.quadrature_rule(4)
    elvec = rng.standard_normal((mesh.n_elems, 3, 2))
    return {
        "element_gradients": lambda B: B.element_gradients(tri, grads, d),
        "ew_blocks": lambda B: B.ew_blocks(areas, *ops, *c, 1.0),
        "invert_blocks": lambda B: B.invert_blocks(blocks),
        "schur_coo": lambda B: B.schur_coo(tri, areas, einv),
        "convection_local": lambda B: B.convection_local(tri, areas, grads, u),
        "penalty": lambda B: B.penalty(tri, areas, d, 400.0, qbary, qw),
        "scatter": lambda B: B.scatter(tri, elvec, n),
    }


def _flatten(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(o) for o in out])
    return np.ravel(out)


def bench_kernels(sizes, repeat):
    if not _kernels.HAS_NUMBA:
        print("numba not available; only the numpy backend would run", file=sys.stderr)
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}{'elems':>8}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}  max|diff|")
    for n in sizes:
        mesh = build_uniform_triangulation((-1, 1, -1, 1), n, n)
        for name, call in kernel_cases(mesh, rng).items():
            call(_kernels.NUMBA)  # compile outside the timed region
            t_np, out_np = best_time(lambda: call(_kernels.NUMPY), repeat)
            t_nb, out_nb = best_time(lambda: call(_kernels.NUMBA), repeat)
            diff = np.max(np.abs(_flatten(out_np) - _flatten(out_nb)))
            print(f"{name:<18}{n:>6}{mesh.n_elems:>8}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}"
                  f"{t_np / t_nb:>9.1f}  {diff:.1e}")


_STEP_SNIPPET = """
import time
from nemflow.config import SimConfig
from nemflow.scheme import time_loop
cfg = SimConfig(nx={n}, ny={n}, t_final={t})
time_loop(cfg.replace(t_final=2 * cfg.k))  # warm-up and JIT
t0 = time.perf_counter()
time_loop(cfg)
print(time.perf_counter() - t0)
"""


def bench_steps(n, steps):
    k = 1e-3
    results = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, NEMFLOW_DISABLE_NUMBA=flag)
        code = _STEP_SNIPPET.format(n=n, t=steps * k)
        out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                             capture_output=True, text=True).stdout
        results[label] = float(out.strip().splitlines()[-1])
    print(f"\n{steps} time steps on a {n}x{n} mesh:")
    for label, t in results.items():
        print(f"  {label:<6} {t:8.3f} s  ({1e3 * t / steps:.2f} ms/step)")
    print(f"  speedup {results['numpy'] / results['numba']:.2f}x")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="32,64,128", help="comma-separated subdivisions per axis")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--steps", type=int, default=0, help="also time this many full steps")
    p.add_argument("--step-mesh", type=int, default=31)
    args = p.parse_args(argv)
    bench_kernels([int(s) for s in args.sizes.split(",")], args.repeat)
    if args.steps:
        bench_steps(args.step_mesh, args.steps)


if __name__ == "__main__":
    main()
