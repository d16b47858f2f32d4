"""Global-best particle swarm optimization over a box.

Randomness comes from one PCG64 stream per run, consumed in a fixed order
(initial positions, then per iteration all r1 draws followed by all r2
draws), so results are reproducible regardless of how the objective is
evaluated.

The default update is asynchronous: particles move one after another and
each sees the global best left by the particles before it in the same
iteration.  ``synchronous=True`` instead moves the whole swarm with the
previous iteration's global best and evaluates it as one batch, which lets
evaluations run in parallel.  Either way the best-position bookkeeping is a
sequential scan in particle order with strict ``<``, so ties keep the
incumbent.

The objective is a callable taking an ``(m, dim)`` array and returning
``m`` values; wrap a scalar function with :func:`batched`.  An objective
exposing ``quadratic = (H, b, k)`` runs each asynchronous sweep inside one
compiled kernel.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import HelmPsoError, InvalidArgument


class PsoEvaluationError(HelmPsoError, RuntimeError):
    pass


@dataclass(frozen=True)
class PsoConfig:
    n_particles: int = 60
    c1: float = 1.5
    c2: float = 1.5
    omega: float = 0.5
    max_iter: int = 200
    lb: float = -7.0
    ub: float = 7.0
    tolerance: float = 0.0
    seed: int = 0
    per_component_random: bool = False
    synchronous: bool = False

    def __post_init__(self):
        if self.n_particles < 1:
            raise InvalidArgument(f"n_particles must be >= 1, got {self.n_particles}")
        if not self.lb < self.ub:
            raise InvalidArgument(f"need lb < ub, got [{self.lb}, {self.ub}]")
        if self.max_iter < 0:
            raise InvalidArgument(f"max_iter must be >= 0, got {self.max_iter}")
        if not self.tolerance >= 0.0:
            raise InvalidArgument(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass
class SwarmState:
    X: np.ndarray
    V: np.ndarray
    P: np.ndarray
    fp: np.ndarray
    fx: np.ndarray
    g_idx: int
    g_val: float
    rng: np.random.Generator
    iteration: int = 0
    n_evals: int = 0

    @property
    def g(self) -> np.ndarray:
        return self.P[self.g_idx]


@dataclass
class PsoTrace:
    best_cost: list = field(default_factory=list)
    best_position: list = field(default_factory=list)
    mean_cost: list = field(default_factory=list)
    n_evals: int = 0
    wall_time: float = 0.0

    def record(self, state: SwarmState) -> None:
        self.best_cost.append(state.g_val)
        self.best_position.append(state.g.copy())
        finite = state.fx[np.isfinite(state.fx)]
        self.mean_cost.append(float(finite.mean()) if finite.size else math.nan)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "best_cost", "mean_cost"])
            for i, (b, m) in enumerate(zip(self.best_cost, self.mean_cost)):
                w.writerow([i, f"{b:.17g}", f"{m:.17g}"])


@dataclass(frozen=True)
class PsoResult:
    position: np.ndarray
    value: float
    trace: PsoTrace


def batched(fun, threads: int = 1):
    """Turn ``fun(x) -> float`` into a batch objective.

    With ``threads > 1`` rows are evaluated on a thread pool; results keep
    row order, so the run stays deterministic.
    """
    def objective(X):
        if threads > 1 and len(X) > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                return np.fromiter(ex.map(fun, X), dtype=float, count=len(X))
        return np.fromiter((fun(x) for x in X), dtype=float, count=len(X))

    return objective


def chunked(batch_fun, threads: int = 1):
    """Split a batch objective into ``threads`` row blocks run concurrently."""
    if threads <= 1:
        return batch_fun

    def objective(X):
        parts = np.array_split(X, min(threads, len(X)))
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return np.concatenate(list(ex.map(batch_fun, parts)))

    return objective


def _evaluate(objective, X, state_iter):
    try:
        fx = np.asarray(objective(X), dtype=float)
    except Exception as exc:
        raise PsoEvaluationError(f"objective failed at iteration {state_iter}: {exc}") from exc
    if fx.shape != (len(X),):
        raise PsoEvaluationError(
            f"objective returned shape {fx.shape} at iteration {state_iter}, expected ({len(X)},)"
        )
    return fx


def initialize(config: PsoConfig, dim: int, objective) -> SwarmState:
    if dim < 1:
        raise InvalidArgument(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(config.seed)
    N = config.n_particles
    X = config.lb + (config.ub - config.lb) * rng.random((N, dim))
    V = np.zeros((N, dim))
    fx = _evaluate(objective, X, 0)
    P = X.copy()
    fp = fx.copy()
    g_idx = int(np.argmin(np.where(np.isnan(fp), np.inf, fp)))
    return SwarmState(X, V, P, fp, fx, g_idx, float(fp[g_idx]), rng, 0, N)


def _draws(state: SwarmState, config: PsoConfig):
    N, dim = state.X.shape
    if config.per_component_random:
        return state.rng.random((N, dim)), state.rng.random((N, dim))
    r1 = np.repeat(state.rng.random(N)[:, None], dim, axis=1)
    r2 = np.repeat(state.rng.random(N)[:, None], dim, axis=1)
    return r1, r2


def step(state: SwarmState, config: PsoConfig, objective) -> SwarmState:
    """Advance the swarm by one iteration (in place; also returned)."""
    N, dim = state.X.shape
    r1, r2 = _draws(state, config)
    lb = np.full(dim, float(config.lb))
    ub = np.full(dim, float(config.ub))
    omega, c1, c2 = float(config.omega), float(config.c1), float(config.c2)
    state.iteration += 1
    quadratic = getattr(objective, "quadratic", None)

    if config.synchronous:
        g = state.g.copy()
        _kernels.swarm_move(state.X, state.V, state.P, g, r1, r2, omega, c1, c2, lb, ub)
        state.fx = _evaluate(objective, state.X, state.iteration)
        g_idx, g_val = _kernels.update_bests(
            state.X, state.fx, state.P, state.fp, state.g_idx, state.g_val
        )
    elif quadratic is not None:
        H, b, k = quadratic
        g_idx, g_val = _kernels.pso_iter_quadratic(
            state.X, state.V, state.P, state.fp, state.fx, state.g_idx, state.g_val,
            r1, r2, omega, c1, c2, lb, ub, H, b, float(k),
        )
    else:
        g_idx, g_val = state.g_idx, state.g_val
        for i in range(N):
            row = slice(i, i + 1)
            _kernels.swarm_move(
                state.X[row], state.V[row], state.P[row], state.P[g_idx].copy(),
                r1[row], r2[row], omega, c1, c2, lb, ub,
            )
            fx = _evaluate(objective, state.X[row], state.iteration)[0]
            state.fx[i] = fx
            if fx < state.fp[i]:
                state.fp[i] = fx
                state.P[i] = state.X[i]
                if fx < g_val:
                    g_idx, g_val = i, fx
    state.n_evals += N
    state.g_idx = int(g_idx)
    state.g_val = float(g_val)
    return state


def run(config: PsoConfig, dim: int, objective) -> PsoResult:
    t0 = time.perf_counter()
    state = initialize(config, dim, objective)
    trace = PsoTrace()
    trace.record(state)
    for _ in range(config.max_iter):
        old = state.g_val
        step(state, config, objective)
        trace.record(state)
        if abs(state.g_val - old) < config.tolerance:
            break
    trace.n_evals = state.n_evals
    trace.wall_time = time.perf_counter() - t0
    return PsoResult(state.g.copy(), state.g_val, trace)
