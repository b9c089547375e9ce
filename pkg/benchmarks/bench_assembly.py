"""Timing comparison of the numba and pure-numpy kernel paths.

Measures the triangle element-matrix kernel (dominant assembly cost) and
the fracture contact residual (evaluated once per fixed-point iteration).
Run:  python benchmarks/bench_assembly.py [levels]
"""

import os
import sys
import time

import numpy as np

from porofrac.backend import ENV_VAR
from porofrac.contact import FractureQuadrature
from porofrac.geometry import build_rect_mesh_with_fracture, uniform_refine
from porofrac.kernels import tri_geometry, tri_local_matrices
from porofrac.materials import MaterialParams


def time_call(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(levels=3):
    mesh, frac, dofmap = build_rect_mesh_with_fracture(
        (0.0, 0.0, 1.0, 1.0), ((0.25, 0.5), (0.75, 0.5)), 0.05
    )
    params = MaterialParams(
        gravity=0.0,
        contact_stiffness=1e8,
        contact_exponent=2.0,
        friction_coefficient=1e6,
        friction_exponent=2.0,
        jump_sign=-1,
    )
    keff = params.permeability / params.viscosity
    rng = np.random.default_rng(0)

    print(f"{'elements':>10} {'kernel':>18} {'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
    for level in range(levels):
        if level:
            mesh, frac, dofmap = uniform_refine(mesh, frac)
        grads, areas = tri_geometry(mesh.nodes, mesh.triangles)
        fq = FractureQuadrature(mesh, frac, dofmap)
        u = 1e-3 * rng.standard_normal(2 * mesh.n_nodes)
        x = rng.standard_normal(2 * mesh.n_nodes)

        rows = {}
        for backend in ("numba", "numpy"):
            os.environ[ENV_VAR] = backend
            # warm up (includes JIT compilation for numba)
            tri_local_matrices(grads, areas, keff)
            fq.normal_residual(u, params)
            fq.friction_residual(u, x, 1e-3, params)
            rows[backend] = (
                time_call(lambda: tri_local_matrices(grads, areas, keff)),
                time_call(
                    lambda: (
                        fq.normal_residual(u, params),
                        fq.friction_residual(u, x, 1e-3, params),
                    )
                ),
            )
        os.environ.pop(ENV_VAR, None)
        for k, label in enumerate(("triangle matrices", "contact residuals")):
            nb, npy = rows["numba"][k], rows["numpy"][k]
            print(
                f"{mesh.n_triangles:>10} {label:>18} {1e3 * nb:>12.3f} "
                f"{1e3 * npy:>12.3f} {npy / nb:>8.1f}x"
            )


if __name__ == "__main__":
    bench(int(sys.argv[1]) if len(sys.argv) > 1 else 3)
