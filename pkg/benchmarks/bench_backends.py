"""Compare the compiled scatter kernels against the numpy fallback.

Times the raw scatter, a full fluctuation-matrix value assembly, and one
whole ensemble step per backend.  Run from the repository root:

    python3 benchmarks/bench_backends.py [--m 64] [--J 4] [--reps 20]
"""

import argparse
import time

import numpy as np

from ensheat import backend
from ensheat.assembly import _geometry, assemble_stiffness
from ensheat.conductivity import ConductivityModel
from ensheat.ensemble import initial_state
from ensheat.manufactured import manufactured_scenario
from ensheat.mesh import build_structured_mesh


def best_of(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=64)
    parser.add_argument("--J", type=int, default=4)
    parser.add_argument("--reps", type=int, default=20)
    args = parser.parse_args()

    mesh = build_structured_mesh(args.m)
    geom = _geometry(mesh)
    model = ConductivityModel.exponential(-0.1, 0.5, 2.0)
    rng = np.random.default_rng(0)
    field = rng.uniform(-1.0, 1.0, mesh.num_vertices)
    vals = (rng.standard_normal(mesh.num_triangles)[:, None, None] * geom.gstiff).ravel()

    case = manufactured_scenario("mixed", l=1, J=args.J, m=args.m)
    system = case.scenario.system()
    state = initial_state(case.scenario)
    system.step(state)  # warm caches + factorization

    names = list(backend.available_backends())
    if len(names) < 2:
        print("compiled backend unavailable; timing the numpy fallback only")

    results = {}
    for name in names:
        backend.set_backend(name)
        data = np.zeros(geom.nnz)
        scatter = best_of(lambda: backend.scatter_add(data, geom.pos, vals), args.reps)
        assembly = best_of(
            lambda: assemble_stiffness(mesh, coeff=field, model=model, mode="kappa_prime_of"),
            args.reps,
        )
        step = best_of(lambda: system.step(state), max(3, args.reps // 4))
        results[name] = (scatter, assembly, step)
    backend.set_backend(names[-1] if "cython" not in names else "cython")

    ntri = mesh.num_triangles
    print(f"mesh m={args.m} ({ntri} triangles), ensemble J={args.J}")
    print(f"{'backend':>8} {'scatter':>12} {'assembly':>12} {'full step':>12}")
    for name, (scatter, assembly, step) in results.items():
        print(f"{name:>8} {1e6 * scatter:>9.1f} us {1e6 * assembly:>9.1f} us {1e3 * step:>9.2f} ms")
    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(
            f"speedup (python/cython): scatter {py[0] / cy[0]:.1f}x, "
            f"assembly {py[1] / cy[1]:.1f}x, step {py[2] / cy[2]:.2f}x"
        )


if __name__ == "__main__":
    main()
