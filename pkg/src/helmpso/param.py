"""Polynomial parameterization of boundary functions on Gamma_i."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev, polynomial

from .errors import IllConditionedBasis, InvalidArgument
from .fem import BoundaryField, segment_mass
from .mesh import BoundarySegment

GRAM_COND_MAX = 1e12


@dataclass(frozen=True, eq=False)
class PolyBasis:
    """Degree-``d`` polynomials in the normalized coordinate t of a segment.

    ``matrix`` holds basis values at the segment nodes, shape (n_nodes, d+1).
    """

    degree: int
    kind: str
    segment: BoundarySegment
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.degree < 0:
            raise InvalidArgument(f"degree must be >= 0, got {self.degree}")
        if self.kind == "chebyshev":
            B = chebyshev.chebvander(self.segment.t, self.degree)
        elif self.kind == "monomial":
            B = polynomial.polyvander(self.segment.t, self.degree)
        else:
            raise InvalidArgument(f"unknown basis kind {self.kind!r}")
        B.setflags(write=False)
        object.__setattr__(self, "matrix", B)

    @property
    def dim(self) -> int:
        return self.degree + 1

    def gram(self) -> np.ndarray:
        """L2(segment) Gram matrix of the basis functions."""
        return self.matrix.T @ segment_mass(self.segment) @ self.matrix


def make_basis(segment: BoundarySegment, degree: int = 5, kind: str = "chebyshev") -> PolyBasis:
    return PolyBasis(degree, kind, segment)


def coeffs_to_field(basis: PolyBasis, coeffs) -> BoundaryField:
    c = np.asarray(coeffs, dtype=float)
    if c.shape != (basis.dim,):
        raise InvalidArgument(f"expected {basis.dim} coefficients, got shape {c.shape}")
    return BoundaryField(basis.segment.tag, basis.matrix @ c)


def project(basis: PolyBasis, field) -> np.ndarray:
    """Coefficients of the L2(segment)-best polynomial approximation."""
    values = field.values if isinstance(field, BoundaryField) else np.asarray(field, dtype=float)
    if values.shape != (basis.segment.n_nodes,):
        raise InvalidArgument("field does not live on the basis segment nodes")
    M = segment_mass(basis.segment)
    G = basis.matrix.T @ M @ basis.matrix
    cond = np.linalg.cond(G)
    if not cond <= GRAM_COND_MAX:
        raise IllConditionedBasis(f"Gram matrix condition {cond:.3e} exceeds {GRAM_COND_MAX:.0e}")
    return np.linalg.solve(G, basis.matrix.T @ (M @ values))
