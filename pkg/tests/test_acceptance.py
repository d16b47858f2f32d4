"""Acceptance criteria 1-8, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed in the terminal summary (and directly when this file is run as a
script).
"""

import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from helmpso import cli
from helmpso.objective import eval_fast, eval_naive
from helmpso.oracle import extract_quadratic, solve_normal_equations
from helmpso.pso import PsoConfig, initialize, step

sys.path.insert(0, str(Path(__file__).parent))
from conftest import problem_for, response_for  # noqa: E402

RESULTS = {}
SETTINGS = [(c, f) for c in ("square", "disc") for f in ("dirichlet", "neumann")]
SEEDS = (1, 2, 3, 4, 5)


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def _config(case, formulation="dirichlet", alpha=1e-8):
    return cli.load_config(None, {
        "experiment.case": case,
        "experiment.formulation": formulation,
        "experiment.alpha": alpha,
    })


# 1 -------------------------------------------------------------------------

def test_criterion_1_fem_order():
    t0 = time.perf_counter()
    ratios = {}
    for case in ("square", "disc"):
        rows = cli.fem_convergence(case, cli.DEFAULT_FEM_LEVELS[case])
        ratios[case] = [r["ratio"] for r in rows[1:]]
    elapsed = time.perf_counter() - t0
    ok = all(3.2 <= r <= 4.8 for rs in ratios.values() for r in rs) and elapsed < 30
    detail = ", ".join(f"{c} ratios {np.round(rs, 3).tolist()}" for c, rs in ratios.items())
    record(1, ok, f"{detail}; {elapsed:.1f}s")


# 2 -------------------------------------------------------------------------

def test_criterion_2_fast_equals_naive():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for case, form in SETTINGS:
        config, rb = response_for(case, form)
        problem, _ = problem_for(case)
        for c in rng.uniform(-7, 7, (100, 6)):
            J = eval_naive(config, problem, c)
            worst = max(worst, abs(eval_fast(rb, c) - J) / (1 + abs(J)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 60
    record(2, ok, f"max |fast-naive|/(1+|J|) = {worst:.2e} over 4x100 points; {elapsed:.1f}s")


# 3 -------------------------------------------------------------------------

def test_criterion_3_oracle_optimality():
    rng = np.random.default_rng(3)
    worst_grad = 0.0
    all_min = True
    for case, form in SETTINGS:
        _, rb = response_for(case, form)
        q = extract_quadratic(rb)
        res = solve_normal_equations(q, -7, 7)
        h = 1e-4
        fd = np.array([(eval_fast(rb, res.coeffs + h * e) - eval_fast(rb, res.coeffs - h * e)) / (2 * h)
                       for e in np.eye(rb.dim)])
        # relative to the gradient scale of the functional (its gradient at c = 0)
        worst_grad = max(worst_grad, np.linalg.norm(fd) / max(np.linalg.norm(rb.b), 1e-300))
        X = rng.uniform(-7, 7, (1000, rb.dim))
        all_min &= bool(np.all(res.value <= eval_fast(rb, X)))
    ok = worst_grad <= 1e-6 and all_min
    record(3, ok, f"max relative FD gradient at c* = {worst_grad:.2e}; "
                  f"J* <= J at 1000 random points: {all_min}")


# 4 -------------------------------------------------------------------------

GAP_FACTOR = 10.0  # calibrated once (medians ~1.0) and frozen


def test_criterion_4_pso_oracle_gap():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for case in ("square", "disc"):
        cfg = _config(case)
        runs = [cli.reconstruct(cfg, seed=s) for s in SEEDS]
        med = float(np.median([r.J_final for r in runs]))
        Jstar = runs[0].J_oracle
        ok &= med <= GAP_FACTOR * Jstar
        parts.append(f"{case} median J {med:.3e} / J* {Jstar:.3e} = {med / Jstar:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    record(4, ok, "; ".join(parts) + f"; {elapsed:.1f}s")


# 5 -------------------------------------------------------------------------

BANDS = [
    # case, formulation, weight, band, reference optimum
    ("square", "dirichlet", 1e-8, (1e-6, 1e-4), 1.291e-05),
    ("disc", "dirichlet", 1e-8, (1e-7, 1e-5), 6.7854e-06),
    ("disc", "neumann", 1e-6, (1e-4, 1e-2), 2.143e-03),
]


def test_criterion_5_reference_orders_of_magnitude():
    parts = []
    ok = True
    for case, form, alpha, (lo, hi), reported in BANDS:
        r = cli.reconstruct(_config(case, form, alpha), seed=1)
        inside = lo <= r.J_final <= hi
        ok &= inside
        parts.append(f"{case}/{form} J={r.J_final:.3e} (J*={r.J_oracle:.3e}, reference {reported:.3e}) "
                     f"in [{lo:.0e}, {hi:.0e}]: {'yes' if inside else 'NO'}")
    record(5, ok, "; ".join(parts))


# 6 -------------------------------------------------------------------------

NOISE_LEVELS = (0.0, 0.01, 0.02, 0.03)


def test_criterion_6_noise_stability():
    t0 = time.perf_counter()
    parts = []
    ok = True
    for case in ("square", "disc"):
        cfg = _config(case)
        medians, errors3 = [], []
        for nu in NOISE_LEVELS:
            runs = [cli.reconstruct(cfg, nu=nu, seed=s) for s in SEEDS]
            medians.append(float(np.median([r.J_final for r in runs])))
            if nu == 0.03:
                errors3 = [r.trace_error for r in runs]
        monotone = all(a <= b for a, b in zip(medians, medians[1:]))
        ok &= monotone
        msg = (f"{case} median J {['%.2e' % m for m in medians]} non-decreasing: {monotone}, "
               f"trace error at 3% max {max(errors3):.3f} median {np.median(errors3):.3f}")
        if case == "square":
            # the bound refers to the unit-square stability study
            bounded = max(errors3) <= 0.15
            ok &= bounded
            msg += f" <= 0.15: {bounded}"
        else:
            msg += " (reported only)"
        parts.append(msg)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 900
    record(6, ok, "; ".join(parts) + f"; {elapsed:.1f}s")


# 7 -------------------------------------------------------------------------

def _sphere(X):
    return np.sum(X * X, axis=1)


def _rosenbrock(X):
    return np.sum(100 * (X[:, 1:] - X[:, :-1] ** 2) ** 2 + (1 - X[:, :-1]) ** 2, axis=1)


def test_criterion_7_pso_invariants():
    t0 = time.perf_counter()
    violations = 0
    runs = 0
    for fun in (_sphere, _rosenbrock):
        for seed in range(50):
            cfg = PsoConfig(seed=seed)
            state = initialize(cfg, 6, fun)
            prev = state.g_val
            for _ in range(cfg.max_iter):
                step(state, cfg, fun)
                violations += state.g_val > prev
                violations += not np.all((state.X >= cfg.lb) & (state.X <= cfg.ub))
                prev = state.g_val
            runs += 1
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 60
    record(7, ok, f"{runs} runs x 200 iterations, {violations} violations; {elapsed:.1f}s")


# 8 -------------------------------------------------------------------------

def _cli(args, cwd):
    env = dict(os.environ)
    return subprocess.run([sys.executable, "-m", "helmpso", *args], cwd=cwd, env=env,
                          capture_output=True, text=True)


def _csv_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(Path(out).glob("*.csv"))}


def test_criterion_8_determinism(tmp_path):
    checks = []
    for label, text in (("async", ""), ("synchronous", "[pso]\nsynchronous = true\n")):
        cfg = tmp_path / f"{label}.ini"
        cfg.write_text(text + "[output]\ndirectory = out\n")
        snapshots = []
        for threads in ("1", "1", "8"):
            proc = _cli(["reconstruct", "--config", str(cfg), "--seed", "7", "--threads", threads], tmp_path)
            assert proc.returncode == 0, proc.stderr
            snapshots.append(_csv_bytes(tmp_path / "out"))
        same = snapshots[0] == snapshots[1] == snapshots[2] and len(snapshots[0]) == 3
        checks.append((label, same))
    ok = all(s for _, s in checks)
    record(8, ok, ", ".join(f"{lab}: byte-identical x3 (incl. --threads 8): {s}"
                            for lab, s in checks))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
