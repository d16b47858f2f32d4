"""Compare the numba and pure-numpy kernels, and the fast vs naive objective.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each timing is the best of ``--repeat`` runs after one warm-up call (which
absorbs numba compilation).
"""

import argparse
import json
import time

import numpy as np

from helmpso import _kernels
from helmpso.cases import make_case, synthesize_data
from helmpso.mesh import Tag, boundary_segment, build_unit_disc_mesh, build_unit_square_mesh
from helmpso.objective import InverseProblem, ObjectiveConfig, build_response_basis, eval_fast, eval_naive
from helmpso.param import make_basis


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    mesh = build_unit_disc_mesh(256)
    nodes = np.ascontiguousarray(mesh.nodes)
    tris = np.ascontiguousarray(mesh.triangles, dtype=np.int64)

    n, d = 60, 6
    A = rng.normal(size=(d, d))
    H = A @ A.T + np.eye(d)
    b = rng.normal(size=d)
    X0 = rng.uniform(-7, 7, (n, d))
    V0 = rng.normal(size=(n, d))
    P0 = rng.uniform(-7, 7, (n, d))
    r1, r2 = rng.random((n, d)), rng.random((n, d))
    lb, ub = np.full(d, -7.0), np.full(d, 7.0)
    Xbig = rng.uniform(-7, 7, (20000, d))

    def p1(impl):
        return lambda: impl.p1_local(nodes, tris)

    def move(impl):
        def f():
            X, V = X0.copy(), V0.copy()
            impl.swarm_move(X, V, P0, P0[0], r1, r2, 0.5, 1.5, 1.5, lb, ub)
        return f

    def quad(impl):
        return lambda: impl.quad_form(Xbig, H, b, 0.1)

    def sweep(impl):
        fp0 = _kernels.numpy_impl.quad_form(P0, H, b, 0.1)

        def f():
            X, V, P, fp, fx = X0.copy(), V0.copy(), P0.copy(), fp0.copy(), np.zeros(n)
            for _ in range(200):
                impl.pso_iter_quadratic(X, V, P, fp, fx, 0, float(fp[0]), r1, r2,
                                        0.5, 1.5, 1.5, lb, ub, H, b, 0.1)
        return f

    return [
        (f"p1_local ({len(tris)} triangles)", p1),
        ("swarm_move (60 x 6)", move),
        ("quad_form (20000 x 6)", quad),
        ("pso_iter_quadratic (200 sweeps)", sweep),
    ]


def objective_cases(rng, repeat):
    rows = []
    for case, build, n in (("square", build_unit_square_mesh, 32), ("disc", build_unit_disc_mesh, 64)):
        bc = make_case(case)
        mesh = build(n)
        data, _ = synthesize_data(bc, mesh)
        problem = InverseProblem(mesh, bc.mu, data, make_basis(boundary_segment(mesh, Tag.I)))
        for form in ("dirichlet", "neumann"):
            config = ObjectiveConfig(form, 1e-8)
            rb = build_response_basis(config, problem)
            X = rng.uniform(-7, 7, (20, 6))
            naive = best_of(lambda: [eval_naive(config, problem, x) for x in X], repeat) / len(X)
            fast = best_of(lambda: eval_fast(rb, X), repeat) / len(X)
            rows.append((f"{case}/{form}", naive, fast))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results to this file")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    out = {"kernels": [], "objective": []}

    if _kernels.numba_impl is None:
        print("numba not available; only the numpy path can be timed")
    print(f"{'kernel':36s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>9s}")
    for name, make in kernel_cases(rng):
        t_np = best_of(make(_kernels.numpy_impl), args.repeat)
        t_nb = best_of(make(_kernels.numba_impl), args.repeat) if _kernels.numba_impl else float("nan")
        print(f"{name:36s} {1e3 * t_np:12.3f} {1e3 * t_nb:12.3f} {t_np / t_nb:9.1f}")
        out["kernels"].append({"name": name, "numpy_s": t_np, "numba_s": t_nb})

    print()
    print(f"{'objective':36s} {'naive [us]':>12s} {'fast [us]':>12s} {'speedup':>9s}")
    for name, naive, fast in objective_cases(rng, args.repeat):
        print(f"{name:36s} {1e6 * naive:12.2f} {1e6 * fast:12.4f} {naive / fast:9.0f}")
        out["objective"].append({"name": name, "naive_s": naive, "fast_s": fast})

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(out, fh, indent=2)


if __name__ == "__main__":
    main()
