"""Experiment driver: ``helmpso <command> --config run.ini``.

Config files are INI (``key = value`` inside named sections).  Every key is
optional; unknown sections or keys are rejected.  The schema, with defaults:

    [experiment]
    case = square            ; square | disc
    formulation = dirichlet  ; dirichlet | neumann
    mesh_n = auto            ; auto = 32 (square), 64 (disc)
    degree = 5
    basis = chebyshev        ; chebyshev | monomial
    alpha = 1e-8             ; Tikhonov weight (alpha or beta)
    regularizer = l2+h1      ; l2 | l2+h1

    [pso]
    n_particles = 60
    c1 = 1.5
    c2 = 1.5
    omega = 0.5
    max_iter = 200
    lb = -7
    ub = 7
    tolerance = 0
    seed = 1
    per_component_random = false
    synchronous = false

    [noise]
    level = 0                ; used by reconstruct, noise seed = pso seed
    levels = 0, 0.01, 0.02, 0.03
    seeds = 1, 2, 3, 4, 5

    [sweep]
    etas = 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8

    [fem]
    levels = auto            ; auto = 8,16,32 (square), 32,64,128 (disc)

    [output]
    directory = out

Exit codes: 0 success, 1 numerical failure, 2 configuration error.

CSV outputs are deterministic given the config and seeds.  Wall times go
to ``timing.json`` so they never perturb the CSV bytes.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import functools
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cases import add_noise, make_case, synthesize_data, CASES
from .errors import ConfigError, HelmPsoError
from .fem import FactorizedOperator, boundary_l2_norm, domain_l2_error
from .mesh import (
    Tag,
    boundary_segment,
    build_unit_disc_mesh,
    build_unit_square_mesh,
    validate,
    write_mesh,
)
from .objective import (
    FastObjective,
    Formulation,
    InverseProblem,
    ObjectiveConfig,
    Regularizer,
    build_response_basis,
    eval_fast,
    eval_naive,
)
from .oracle import extract_quadratic, solve_normal_equations
from .param import coeffs_to_field, make_basis
from .plot import line_chart
from .pso import PsoConfig, chunked, run

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

DEFAULT_MESH_N = {"square": 32, "disc": 64}
DEFAULT_FEM_LEVELS = {"square": (8, 16, 32), "disc": (32, 64, 128)}
FEM_RATIO_BAND = (3.2, 4.8)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    case: str = "square"
    formulation: str = "dirichlet"
    mesh_n: int | None = None
    degree: int = 5
    basis: str = "chebyshev"
    alpha: float = 1e-8
    regularizer: str = "l2+h1"
    pso: PsoConfig = field(default_factory=lambda: PsoConfig(seed=1))
    noise_level: float = 0.0
    noise_levels: tuple = (0.0, 0.01, 0.02, 0.03)
    noise_seeds: tuple = (1, 2, 3, 4, 5)
    etas: tuple = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
    fem_levels: tuple | None = None
    output: str = "out"

    @property
    def effective_mesh_n(self) -> int:
        return self.mesh_n if self.mesh_n is not None else DEFAULT_MESH_N[self.case]

    @property
    def effective_fem_levels(self) -> tuple:
        return self.fem_levels if self.fem_levels is not None else DEFAULT_FEM_LEVELS[self.case]

    def echo(self) -> list[tuple[str, str]]:
        """Flat (key, value) listing of every effective setting."""
        p = self.pso
        rows = [
            ("experiment.case", self.case),
            ("experiment.formulation", self.formulation),
            ("experiment.mesh_n", self.effective_mesh_n),
            ("experiment.degree", self.degree),
            ("experiment.basis", self.basis),
            ("experiment.alpha", self.alpha),
            ("experiment.regularizer", self.regularizer),
        ]
        rows += [(f"pso.{f.name}", getattr(p, f.name)) for f in dataclasses.fields(p)]
        rows += [
            ("noise.level", self.noise_level),
            ("noise.levels", self.noise_levels),
            ("noise.seeds", self.noise_seeds),
            ("sweep.etas", self.etas),
            ("fem.levels", self.effective_fem_levels),
            ("output.directory", self.output),
        ]
        return [(k, _fmt_value(v)) for k, v in rows]


def _fmt_float(x) -> str:
    return f"{float(x):.17g}"


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return _fmt_float(v)
    if isinstance(v, (tuple, list)):
        return " ".join(_fmt_value(x) for x in v)
    return str(v)


def _parse_bool(key, s):
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {s!r}")


def _parse_num(key, s, kind):
    try:
        return kind(s.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {s!r}") from None


def _parse_list(key, s, kind):
    parts = [x for x in s.replace(",", " ").split() if x]
    if not parts:
        raise ConfigError(f"{key}: empty list")
    return tuple(_parse_num(key, x, kind) for x in parts)


def _choice(key, s, options):
    t = s.strip().lower()
    if t not in options:
        raise ConfigError(f"{key}: expected one of {sorted(options)}, got {s!r}")
    return t


SCHEMA = {
    "experiment": {
        "case": lambda k, s: _choice(k, s, set(CASES)),
        "formulation": lambda k, s: _choice(k, s, {f.value for f in Formulation}),
        "mesh_n": lambda k, s: None if s.strip().lower() == "auto" else _parse_num(k, s, int),
        "degree": lambda k, s: _parse_num(k, s, int),
        "basis": lambda k, s: _choice(k, s, {"chebyshev", "monomial"}),
        "alpha": lambda k, s: _parse_num(k, s, float),
        "regularizer": lambda k, s: _choice(k, s, {r.value for r in Regularizer}),
    },
    "pso": {
        "n_particles": lambda k, s: _parse_num(k, s, int),
        "c1": lambda k, s: _parse_num(k, s, float),
        "c2": lambda k, s: _parse_num(k, s, float),
        "omega": lambda k, s: _parse_num(k, s, float),
        "max_iter": lambda k, s: _parse_num(k, s, int),
        "lb": lambda k, s: _parse_num(k, s, float),
        "ub": lambda k, s: _parse_num(k, s, float),
        "tolerance": lambda k, s: _parse_num(k, s, float),
        "seed": lambda k, s: _parse_num(k, s, int),
        "per_component_random": _parse_bool,
        "synchronous": _parse_bool,
    },
    "noise": {
        "level": lambda k, s: _parse_num(k, s, float),
        "levels": lambda k, s: _parse_list(k, s, float),
        "seeds": lambda k, s: _parse_list(k, s, int),
    },
    "sweep": {"etas": lambda k, s: _parse_list(k, s, float)},
    "fem": {
        "levels": lambda k, s: None if s.strip().lower() == "auto" else _parse_list(k, s, int),
    },
    "output": {"directory": lambda k, s: s.strip()},
}

# config key -> ExperimentConfig field, for the non-pso sections
_FIELD = {
    ("noise", "level"): "noise_level",
    ("noise", "levels"): "noise_levels",
    ("noise", "seeds"): "noise_seeds",
    ("sweep", "etas"): "etas",
    ("fem", "levels"): "fem_levels",
    ("output", "directory"): "output",
}


def _check_ranges(cfg: ExperimentConfig) -> None:
    n = cfg.effective_mesh_n
    if cfg.case == "square" and n < 2:
        raise ConfigError(f"experiment.mesh_n: square meshes need n >= 2, got {n}")
    if cfg.case == "disc" and (n < 16 or n % 4):
        raise ConfigError(f"experiment.mesh_n: disc meshes need n >= 16 and n % 4 == 0, got {n}")
    if not 0 <= cfg.degree <= 20:
        raise ConfigError(f"experiment.degree: expected 0..20, got {cfg.degree}")
    if not cfg.alpha >= 0:
        raise ConfigError(f"experiment.alpha: must be >= 0, got {cfg.alpha}")
    if not cfg.noise_level >= 0 or any(not v >= 0 for v in cfg.noise_levels):
        raise ConfigError("noise.level/levels: noise levels must be >= 0")
    if any(s < 0 for s in cfg.noise_seeds) or cfg.pso.seed < 0:
        raise ConfigError("seeds must be >= 0")
    if any(not e >= 0 for e in cfg.etas):
        raise ConfigError("sweep.etas: values must be >= 0")
    levels = cfg.effective_fem_levels
    if len(levels) < 2:
        raise ConfigError("fem.levels: need at least two refinement levels")
    for lv in levels:
        if cfg.case == "disc" and (lv < 16 or lv % 4):
            raise ConfigError(f"fem.levels: disc levels need n >= 16 and n % 4 == 0, got {lv}")
        if cfg.case == "square" and lv < 2:
            raise ConfigError(f"fem.levels: square levels need n >= 2, got {lv}")
    if not cfg.output:
        raise ConfigError("output.directory: must not be empty")


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read an INI file (or none) and apply command-line overrides.

    ``overrides`` maps ``"section.key"`` to already-typed values.
    """
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=(";", "#"), strict=True
    )
    parser.optionxform = str
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[(section, key)] = SCHEMA[section][key](f"{section}.{key}", raw)
    for dotted, v in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        values[(section, key)] = v

    pso_kwargs = {"seed": 1}
    top = {}
    for (section, key), v in values.items():
        if section == "pso":
            pso_kwargs[key] = v
        elif section == "experiment":
            top[key] = v
        else:
            top[_FIELD[(section, key)]] = v
    try:
        pso = PsoConfig(**pso_kwargs)
    except HelmPsoError as exc:
        raise ConfigError(f"[pso] {exc}") from None
    cfg = ExperimentConfig(pso=pso, **top)
    _check_ranges(cfg)
    return cfg


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=16)
def _mesh(geometry: str, n: int):
    build = build_unit_square_mesh if geometry == "square" else build_unit_disc_mesh
    return build(n)


@dataclass
class RunResult:
    case: str
    formulation: str
    alpha: float
    nu: float
    seed: int
    s: np.ndarray
    exact: np.ndarray
    reconstructed: np.ndarray
    oracle_field: np.ndarray
    coeffs: np.ndarray
    J_final: float
    J_naive: float
    J_oracle: float
    oracle_inside: bool
    trace_error: float
    oracle_error: float
    n_evals: int
    n_solves: int
    pso_trace: object
    timing: dict


def reconstruct(cfg: ExperimentConfig, *, case=None, formulation=None, alpha=None,
                nu=None, seed=None, threads=1, time_naive=False) -> RunResult:
    """Mesh, data, response basis, PSO and oracle for one setting."""
    case = case or cfg.case
    formulation = Formulation(formulation or cfg.formulation)
    alpha = cfg.alpha if alpha is None else alpha
    nu = cfg.noise_level if nu is None else nu
    seed = cfg.pso.seed if seed is None else seed
    n = cfg.effective_mesh_n if case == cfg.case else DEFAULT_MESH_N[case]
    timing = {}
    try:
        t0 = time.perf_counter()
        bc = make_case(case)
        mesh = _mesh(bc.geometry, n)
        data, target = synthesize_data(bc, mesh)
        data = add_noise(data, nu, seed)
        seg = boundary_segment(mesh, Tag.I)
        basis = make_basis(seg, cfg.degree, cfg.basis)
        problem = InverseProblem(mesh, bc.mu, data, basis)
        ocfg = ObjectiveConfig(formulation, alpha, cfg.regularizer)
        rb = build_response_basis(ocfg, problem)
        timing["setup_s"] = time.perf_counter() - t0

        pcfg = dataclasses.replace(cfg.pso, seed=seed)
        objective = FastObjective(rb)
        if pcfg.synchronous and threads > 1:
            objective = chunked(objective, threads)
        result = run(pcfg, basis.dim, objective)
        timing["pso_s"] = result.trace.wall_time

        oracle = solve_normal_equations(extract_quadratic(rb), pcfg.lb, pcfg.ub)
    except HelmPsoError as exc:
        raise type(exc)(
            f"{case}/{formulation.value} alpha={alpha:g} nu={nu:g} seed={seed}: {exc}"
        ) from exc

    exact = (target.phi_d if formulation is Formulation.DIRICHLET else target.phi_n).values
    rec = coeffs_to_field(basis, result.position).values
    orc = coeffs_to_field(basis, oracle.coeffs).values
    norm = boundary_l2_norm(exact, seg)
    J_naive = eval_naive(ocfg, problem, result.position)

    if time_naive:
        rng = np.random.default_rng(0)
        X = rng.uniform(pcfg.lb, pcfg.ub, size=(5, basis.dim))
        t0 = time.perf_counter()
        for x in X:
            eval_naive(ocfg, problem, x)
        naive = (time.perf_counter() - t0) / len(X)
        Xf = rng.uniform(pcfg.lb, pcfg.ub, size=(2000, basis.dim))
        eval_fast(rb, Xf[:2])
        t0 = time.perf_counter()
        eval_fast(rb, Xf)
        fast = (time.perf_counter() - t0) / len(Xf)
        timing["naive_eval_s"] = naive
        timing["fast_eval_s"] = fast
        timing["fast_speedup"] = naive / fast if fast > 0 else float("inf")

    return RunResult(
        case=case,
        formulation=formulation.value,
        alpha=float(alpha),
        nu=float(nu),
        seed=int(seed),
        s=seg.s.copy(),
        exact=exact,
        reconstructed=rec,
        oracle_field=orc,
        coeffs=result.position,
        J_final=result.value,
        J_naive=J_naive,
        J_oracle=oracle.value,
        oracle_inside=oracle.inside_bounds,
        trace_error=boundary_l2_norm(rec - exact, seg) / norm,
        oracle_error=boundary_l2_norm(rec - orc, seg) / max(boundary_l2_norm(orc, seg), 1e-300),
        n_evals=result.trace.n_evals,
        n_solves=rb.n_solves,
        pso_trace=result.trace,
        timing=timing,
    )


def fem_convergence(case: str, levels) -> list[dict]:
    """Manufactured-solution L2 errors of the mixed direct problem."""
    bc = make_case(case)
    rows = []
    prev = None
    for n in levels:
        mesh = _mesh(bc.geometry, n)
        bad = validate(mesh)
        if bad:
            raise HelmPsoError(f"invalid {bc.geometry} mesh n={n}: {bad}")
        data, target = synthesize_data(bc, mesh)
        op = FactorizedOperator(mesh, bc.mu, Tag.I)
        sol = op.solve(target.phi_d.values, data.g.values)
        err = domain_l2_error(mesh, sol.u, bc.exact_u)
        rows.append({"n": n, "h": mesh.h, "l2_error": err,
                     "ratio": prev / err if prev is not None else float("nan")})
        prev = err
    return rows


def _parallel_map(fun, items, threads):
    """Order-preserving map; results are collected before anything is written."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fun, items))
    return [fun(x) for x in items]


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _fmt_float(v)
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _write_timing(out, payload) -> None:
    payload = dict(payload, backend=_kernels.backend())
    with open(os.path.join(out, "timing.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _label(r: RunResult) -> str:
    return "Dirichlet trace" if r.formulation == "dirichlet" else "Neumann flux"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate_fem(cfg: ExperimentConfig, out: str, threads: int = 1) -> int:
    t0 = time.perf_counter()
    rows = fem_convergence(cfg.case, cfg.effective_fem_levels)
    write_csv(
        os.path.join(out, "fem_convergence.csv"),
        ["n", "h", "l2_error", "ratio"],
        [[r["n"], r["h"], r["l2_error"], r["ratio"]] for r in rows],
    )
    line_chart(
        os.path.join(out, "fem_convergence.svg"),
        [("L2 error", [np.log10(r["h"]) for r in rows], [r["l2_error"] for r in rows])],
        title=f"FEM convergence ({cfg.case})", xlabel="log10 h", ylabel="L2 error", logy=True,
    )
    _write_timing(out, {"command": "validate-fem", "total_s": time.perf_counter() - t0})
    lo, hi = FEM_RATIO_BAND
    ok = all(lo <= r["ratio"] <= hi for r in rows[1:])
    for r in rows:
        print(f"n={r['n']:4d} h={r['h']:.4e} L2={r['l2_error']:.4e} ratio={r['ratio']:.3f}")
    print("order-2 check:", "PASS" if ok else f"FAIL (ratios outside [{lo}, {hi}])")
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_reconstruct(cfg: ExperimentConfig, out: str, threads: int = 1) -> int:
    t0 = time.perf_counter()
    r = reconstruct(cfg, threads=threads, time_naive=True)
    write_csv(
        os.path.join(out, "trace.csv"),
        ["s", "exact", "reconstructed", "oracle"],
        zip(r.s, r.exact, r.reconstructed, r.oracle_field),
    )
    r.pso_trace.write_csv(os.path.join(out, "pso_trace.csv"))
    metrics = [
        ("J_final", r.J_final),
        ("J_final_naive", r.J_naive),
        ("J_oracle", r.J_oracle),
        ("pso_gap_ratio", r.J_final / r.J_oracle if r.J_oracle > 0 else float("nan")),
        ("oracle_inside_bounds", r.oracle_inside),
        ("trace_error", r.trace_error),
        ("oracle_error", r.oracle_error),
        ("n_evals", r.n_evals),
        ("n_fem_solves", r.n_solves),
        ("kernel_backend", _kernels.backend()),
    ]
    metrics += [(f"coeff_{j}", c) for j, c in enumerate(r.coeffs)]
    write_csv(
        os.path.join(out, "summary.csv"),
        ["key", "value"],
        metrics + cfg.echo(),
    )
    it = np.arange(len(r.pso_trace.best_cost))
    line_chart(
        os.path.join(out, "cost.svg"),
        [("global best J", it, r.pso_trace.best_cost), ("swarm mean J", it, r.pso_trace.mean_cost)],
        title=f"PSO convergence ({r.case}, {r.formulation})", xlabel="iteration",
        ylabel="J", logy=True,
    )
    line_chart(
        os.path.join(out, "boundary.svg"),
        [("exact", r.s, r.exact), ("PSO", r.s, r.reconstructed), ("oracle", r.s, r.oracle_field)],
        title=f"{_label(r)} on Gamma_i ({r.case})", xlabel="arclength s", ylabel=_label(r),
    )
    _write_timing(out, dict(r.timing, command="reconstruct", total_s=time.perf_counter() - t0))
    print(f"J_final={r.J_final:.6e} J_oracle={r.J_oracle:.6e} "
          f"trace_error={r.trace_error:.4e} evals={r.n_evals}")
    return EXIT_OK


def cmd_reg_sweep(cfg: ExperimentConfig, out: str, threads: int = 1, etas=None) -> int:
    t0 = time.perf_counter()
    etas = tuple(etas if etas is not None else cfg.etas)
    results = _parallel_map(lambda eta: reconstruct(cfg, alpha=eta), list(etas), threads)
    write_csv(
        os.path.join(out, "reg_sweep.csv"),
        ["eta", "J_final", "trace_error", "J_oracle"],
        [[r.alpha, r.J_final, r.trace_error, r.J_oracle] for r in results],
    )
    line_chart(
        os.path.join(out, "reg_sweep.svg"),
        [(_label(results[0]), [np.log10(max(e, 1e-300)) for e in etas], [r.J_final for r in results])],
        title=f"Regularization sweep ({cfg.case}, {cfg.formulation})", xlabel="log10 eta",
        ylabel="final J", logy=True,
    )
    _write_timing(out, {"command": "reg-sweep", "total_s": time.perf_counter() - t0,
                        "points": [r.timing for r in results]})
    for r in results:
        print(f"eta={r.alpha:.1e} J_final={r.J_final:.6e} trace_error={r.trace_error:.4e}")
    return EXIT_OK


def cmd_noise_study(cfg: ExperimentConfig, out: str, threads: int = 1) -> int:
    t0 = time.perf_counter()
    points = [(nu, s) for nu in cfg.noise_levels for s in cfg.noise_seeds]
    results = _parallel_map(lambda p: reconstruct(cfg, nu=p[0], seed=p[1]), points, threads)
    write_csv(
        os.path.join(out, "noise_study.csv"),
        ["nu", "seed", "J_final", "trace_error"],
        [[r.nu, r.seed, r.J_final, r.trace_error] for r in results],
    )
    first_seed = cfg.noise_seeds[0]
    picked = [r for r in results if r.seed == first_seed]
    series = [("exact", picked[0].s, picked[0].exact)]
    series += [(f"nu = {r.nu:g}", r.s, r.reconstructed) for r in picked]
    line_chart(
        os.path.join(out, "noise_traces.svg"), series,
        title=f"{_label(picked[0])} under noise (seed {first_seed})", xlabel="arclength s",
        ylabel=_label(picked[0]),
    )
    line_chart(
        os.path.join(out, "noise_cost.svg"),
        [(f"nu = {r.nu:g}", np.arange(len(r.pso_trace.best_cost)), r.pso_trace.best_cost)
         for r in picked],
        title=f"PSO convergence under noise (seed {first_seed})", xlabel="iteration",
        ylabel="J", logy=True,
    )
    _write_timing(out, {"command": "noise-study", "total_s": time.perf_counter() - t0})
    for nu in cfg.noise_levels:
        sel = [r for r in results if r.nu == nu]
        print(f"nu={nu:g} median J={np.median([r.J_final for r in sel]):.4e} "
              f"median error={np.median([r.trace_error for r in sel]):.4e}")
    return EXIT_OK


def cmd_compare_dn(cfg: ExperimentConfig, out: str, threads: int = 1) -> int:
    t0 = time.perf_counter()
    points = [(c, f.value) for c in ("square", "disc") for f in Formulation]
    results = _parallel_map(
        lambda p: reconstruct(cfg, case=p[0], formulation=p[1]), points, threads
    )
    write_csv(
        os.path.join(out, "dn_compare.csv"),
        ["case", "formulation", "J_final", "J_oracle", "relative_error"],
        [[r.case, r.formulation, r.J_final, r.J_oracle, r.trace_error] for r in results],
    )
    _write_timing(out, {"command": "compare-dn", "total_s": time.perf_counter() - t0})
    for r in results:
        print(f"{r.case:6s} {r.formulation:9s} J={r.J_final:.4e} error={r.trace_error:.4e}")
    return EXIT_OK


def cmd_mesh(cfg: ExperimentConfig, out: str, threads: int = 1) -> int:
    bc = make_case(cfg.case)
    n = cfg.effective_mesh_n
    mesh = _mesh(bc.geometry, n)
    bad = validate(mesh)
    path = os.path.join(out, f"{bc.geometry}_{n}.mesh")
    write_mesh(mesh, path)
    print(f"{path}: {mesh.n_nodes} nodes, {len(mesh.triangles)} triangles, h={mesh.h:.4e}")
    for msg in bad:
        print("violation:", msg)
    return EXIT_NUMERICAL if bad else EXIT_OK


COMMANDS = {
    "validate-fem": cmd_validate_fem,
    "reconstruct": cmd_reconstruct,
    "reg-sweep": cmd_reg_sweep,
    "noise-study": cmd_noise_study,
    "compare-dn": cmd_compare_dn,
    "mesh": cmd_mesh,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="helmpso", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file")
        p.add_argument("--out", help="output directory (overrides [output] directory)")
        p.add_argument("--seed", type=int, help="PSO seed (overrides [pso] seed)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweep points")
        if name == "reg-sweep":
            p.add_argument("--etas", help="comma-separated regularization weights")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = {}
        if args.seed is not None:
            overrides["pso.seed"] = args.seed
        if args.out is not None:
            overrides["output.directory"] = args.out
        if getattr(args, "etas", None):
            overrides["sweep.etas"] = _parse_list("--etas", args.etas, float)
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        os.makedirs(cfg.output, exist_ok=True)
    except OSError as exc:
        print(f"config error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, cfg.output, args.threads)
    except (HelmPsoError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
