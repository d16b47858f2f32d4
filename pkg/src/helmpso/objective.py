"""Regularized misfit functionals for Dirichlet and Neumann recovery.

Dirichlet recovery prescribes the candidate on Gamma_i together with the
measured flux g on Gamma_c, and compares the computed trace with f.
Neumann recovery prescribes the candidate flux on Gamma_i together with f,
and compares the recovered flux on Gamma_c with g.

Because the forward problem is linear in its data, the functional is an
exact quadratic in the coefficients.  ``build_response_basis`` computes
that quadratic once (d + 2 solves); ``eval_fast`` then needs no solves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .cases import CauchyData
from .errors import InvalidArgument
from .fem import (
    FactorizedOperator,
    FemSolution,
    as_edgewise,
    boundary_h1_seminorm,
    boundary_l2_norm,
    edgewise_inner,
    segment_mass,
    segment_stiffness,
)
from .mesh import Mesh, Tag, boundary_segment
from .param import PolyBasis, coeffs_to_field


class Formulation(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @property
    def dirichlet_tag(self) -> Tag:
        return Tag.I if self is Formulation.DIRICHLET else Tag.C


class Regularizer(str, enum.Enum):
    L2 = "l2"
    L2_H1 = "l2+h1"


@dataclass(frozen=True)
class ObjectiveConfig:
    formulation: Formulation = Formulation.DIRICHLET
    alpha: float = 1e-8
    regularizer: Regularizer = Regularizer.L2_H1

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation(self.formulation))
        object.__setattr__(self, "regularizer", Regularizer(self.regularizer))
        if not self.alpha >= 0.0:
            raise InvalidArgument(f"alpha must be >= 0, got {self.alpha}")


@dataclass(eq=False)
class InverseProblem:
    """Mesh, coefficient, measured data and parameterization for one run.

    Factorized operators are built on first use and cached per Dirichlet tag.
    """

    mesh: Mesh
    mu: float
    data: CauchyData
    basis: PolyBasis
    _ops: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.basis.segment.tag is not Tag.I:
            raise InvalidArgument("the parameterization must live on Gamma_i")
        self.seg_c = boundary_segment(self.mesh, Tag.C)

    def operator(self, formulation: Formulation) -> FactorizedOperator:
        tag = Formulation(formulation).dirichlet_tag
        if tag not in self._ops:
            self._ops[tag] = FactorizedOperator(self.mesh, self.mu, tag)
        return self._ops[tag]


def _forward(problem: InverseProblem, formulation, phi, f, g) -> FemSolution:
    op = problem.operator(formulation)
    if formulation is Formulation.DIRICHLET:
        return op.solve(phi, g)
    return op.solve(f, phi)


def _observation(problem: InverseProblem, formulation, sol: FemSolution) -> np.ndarray:
    """Computed quantity compared with the data on Gamma_c (edgewise)."""
    op = problem.operator(formulation)
    if formulation is Formulation.DIRICHLET:
        return as_edgewise(sol.u[problem.seg_c.node_ids])
    return as_edgewise(op.recover_flux(sol, Tag.C).values)


def _measured(problem: InverseProblem, formulation) -> np.ndarray:
    d = problem.data
    return as_edgewise(d.f.values if formulation is Formulation.DIRICHLET else d.g.values)


def regularization(config: ObjectiveConfig, basis: PolyBasis, values) -> float:
    """Squared norm used by the Tikhonov term."""
    seg = basis.segment
    r = boundary_l2_norm(values, seg) ** 2
    if config.regularizer is Regularizer.L2_H1:
        r += boundary_h1_seminorm(values, seg) ** 2
    return r


def eval_naive(config: ObjectiveConfig, problem: InverseProblem, coeffs) -> float:
    """Evaluate the functional with a full forward solve."""
    phi = coeffs_to_field(problem.basis, coeffs).values
    d = problem.data
    sol = _forward(problem, config.formulation, phi, d.f.values, d.g.values)
    r = _observation(problem, config.formulation, sol) - _measured(problem, config.formulation)
    misfit = 0.5 * edgewise_inner(r, r, problem.seg_c)
    return misfit + 0.5 * config.alpha * regularization(config, problem.basis, phi)


@dataclass(frozen=True, eq=False)
class ResponseBasis:
    config: ObjectiveConfig
    u0: FemSolution
    u: tuple  # FemSolution per basis function
    obs: np.ndarray  # (2*n_edges, dim) edgewise observations of each u_j
    r0: np.ndarray  # (2*n_edges,) residual at zero coefficients
    reg_gram: np.ndarray
    H: np.ndarray
    b: np.ndarray
    k: float
    n_solves: int

    @property
    def dim(self) -> int:
        return len(self.b)

    @property
    def solutions(self) -> tuple:
        return (self.u0,) + self.u


def _edge_mass_blocks(seg) -> np.ndarray:
    """Matrix W with edgewise_inner(a, b) = a.ravel() @ W @ b.ravel()."""
    L = seg.edge_lengths
    n = len(L)
    W = np.zeros((2 * n, 2 * n))
    idx = 2 * np.arange(n)
    W[idx, idx] = W[idx + 1, idx + 1] = L / 3.0
    W[idx, idx + 1] = W[idx + 1, idx] = L / 6.0
    return W


def build_response_basis(config: ObjectiveConfig, problem: InverseProblem) -> ResponseBasis:
    form = config.formulation
    basis = problem.basis
    d = problem.data
    op = problem.operator(form)
    start = op.n_solves
    zero_c_f = np.zeros_like(d.f.values)
    zero_c_g = np.zeros_like(d.g.values)
    u0 = _forward(problem, form, np.zeros(basis.segment.n_nodes), d.f.values, d.g.values)
    r0 = (_observation(problem, form, u0) - _measured(problem, form)).ravel()
    sols, cols = [], []
    for j in range(basis.dim):
        uj = _forward(problem, form, basis.matrix[:, j], zero_c_f, zero_c_g)
        sols.append(uj)
        cols.append(_observation(problem, form, uj).ravel())
    T = np.column_stack(cols)
    W = _edge_mass_blocks(problem.seg_c)
    seg_i = basis.segment
    R_nodal = segment_mass(seg_i)
    if config.regularizer is Regularizer.L2_H1:
        R_nodal = R_nodal + segment_stiffness(seg_i)
    R = basis.matrix.T @ R_nodal @ basis.matrix
    WT = W @ T
    H = T.T @ WT + config.alpha * R
    H = 0.5 * (H + H.T)
    b = WT.T @ r0
    k = 0.5 * float(r0 @ W @ r0)
    return ResponseBasis(
        config, u0, tuple(sols), T, r0, R, H, b, k, op.n_solves - start
    )


def eval_fast(rb: ResponseBasis, coeffs, config: ObjectiveConfig | None = None):
    """Quadratic-form evaluation; accepts one vector or a (m, dim) batch."""
    if config is not None and config != rb.config:
        raise InvalidArgument(f"response basis built for {rb.config}, not {config}")
    c = np.asarray(coeffs, dtype=float)
    single = c.ndim == 1
    X = np.ascontiguousarray(np.atleast_2d(c))
    if X.shape[1] != rb.dim:
        raise InvalidArgument(f"expected {rb.dim} coefficients, got {X.shape[1]}")
    out = _kernels.quad_form(X, rb.H, rb.b, rb.k)
    return float(out[0]) if single else out


def reconstruct_solution(rb: ResponseBasis, coeffs) -> np.ndarray:
    """Nodal solution for the given coefficients, by superposition."""
    u = rb.u0.u.copy()
    for cj, uj in zip(np.asarray(coeffs, dtype=float), rb.u):
        u += cj * uj.u
    return u


class FastObjective:
    """Batch objective over a response basis, usable directly by the PSO."""

    def __init__(self, rb: ResponseBasis):
        self.rb = rb
        self.quadratic = (
            np.ascontiguousarray(rb.H), np.ascontiguousarray(rb.b), float(rb.k)
        )

    def __call__(self, X):
        return eval_fast(self.rb, np.atleast_2d(X))


class NaiveObjective:
    """Batch objective doing one forward solve per row."""

    def __init__(self, config: ObjectiveConfig, problem: InverseProblem):
        self.config = config
        self.problem = problem

    def __call__(self, X):
        X = np.atleast_2d(X)
        return np.array([eval_naive(self.config, self.problem, x) for x in X])
