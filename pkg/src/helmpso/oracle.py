"""Exact minimizer of the quadratic functional, used as ground truth."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import OracleUnavailable


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """J(c) = 0.5 c^T H c + b^T c + k."""

    H: np.ndarray
    b: np.ndarray
    k: float

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        return 0.5 * c @ self.H @ c + self.b @ c + self.k

    def gradient(self, c):
        return self.H @ np.asarray(c, dtype=float) + self.b


@dataclass(frozen=True)
class OracleResult:
    coeffs: np.ndarray
    value: float
    inside_bounds: bool
    gradient_norm: float


def extract_quadratic(rb) -> QuadraticForm:
    return QuadraticForm(rb.H.copy(), rb.b.copy(), float(rb.k))


def solve_normal_equations(q: QuadraticForm, lb: float = -np.inf, ub: float = np.inf) -> OracleResult:
    """Unconstrained minimizer; box containment is reported, not enforced."""
    try:
        factor = sla.cho_factor(q.H)
    except np.linalg.LinAlgError as exc:
        raise OracleUnavailable(f"Hessian is not positive definite: {exc}") from None
    c = -sla.cho_solve(factor, q.b)
    # one step of iterative refinement against the ill-conditioning of H
    c -= sla.cho_solve(factor, q.gradient(c))
    inside = bool(np.all(c >= lb) and np.all(c <= ub))
    return OracleResult(c, float(q(c)), inside, float(np.linalg.norm(q.gradient(c))))
