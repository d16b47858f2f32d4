"""P1 finite elements for -Laplace(u) + mu*u = 0 with mixed boundary data.

One boundary tag carries Dirichlet data (eliminated from the system), the
other carries Neumann data (enters through the boundary mass matrix).  The
reduced matrix is factorized once and reused for every right-hand side.

Boundary fields come in two layouts: nodal, one value per segment node, and
edgewise, shape ``(n_edges, 2)`` holding the values at both ends of every
edge.  Edgewise fields represent data that may jump at a corner, like the
normal flux on the square.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import EigenvalueProximityError, InvalidArgument
from .mesh import BoundarySegment, Mesh, Tag, boundary_segment

PIVOT_RTOL = 1e-12
CORNER_ANGLE = np.pi / 4  # boundary turns sharper than this are corners


@dataclass(frozen=True, eq=False)
class BoundaryField:
    tag: Tag
    values: np.ndarray

    @property
    def edgewise(self) -> bool:
        return self.values.ndim == 2

    def check(self, seg: BoundarySegment) -> None:
        if self.tag is not seg.tag:
            raise InvalidArgument(f"field on {self.tag.value} used on segment {seg.tag.value}")
        want = (seg.n_nodes - 1, 2) if self.edgewise else (seg.n_nodes,)
        if self.values.shape != want:
            raise InvalidArgument(
                f"field shape {self.values.shape} does not match segment shape {want}"
            )


@dataclass(frozen=True, eq=False)
class FemSolution:
    u: np.ndarray
    load: np.ndarray  # global Neumann load vector that produced u
    neumann_data: np.ndarray


# ---------------------------------------------------------------------------
# boundary (1D) helpers
# ---------------------------------------------------------------------------

def segment_mass(seg: BoundarySegment) -> np.ndarray:
    """Consistent P1 mass matrix along a boundary path (dense, tridiagonal)."""
    L = seg.edge_lengths
    n = seg.n_nodes
    M = np.zeros((n, n))
    k = np.arange(n - 1)
    np.add.at(M, (k, k), L / 3.0)
    np.add.at(M, (k + 1, k + 1), L / 3.0)
    M[k, k + 1] += L / 6.0
    M[k + 1, k] += L / 6.0
    return M


def segment_stiffness(seg: BoundarySegment) -> np.ndarray:
    """Matrix of the tangential H1 seminorm along the path."""
    w = 1.0 / seg.edge_lengths
    n = seg.n_nodes
    K = np.zeros((n, n))
    k = np.arange(n - 1)
    np.add.at(K, (k, k), w)
    np.add.at(K, (k + 1, k + 1), w)
    K[k, k + 1] -= w
    K[k + 1, k] -= w
    return K


def as_edgewise(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        return values
    return np.column_stack([values[:-1], values[1:]])


def edgewise_inner(a: np.ndarray, b: np.ndarray, seg: BoundarySegment) -> float:
    """Exact L2 inner product of two piecewise-linear (edgewise) functions."""
    a, b = as_edgewise(a), as_edgewise(b)
    L = seg.edge_lengths
    s = 2.0 * a[:, 0] * b[:, 0] + a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0] + 2.0 * a[:, 1] * b[:, 1]
    return float(np.dot(L / 6.0, s))


def segment_load(values: np.ndarray, seg: BoundarySegment) -> np.ndarray:
    """Integrals of the data against each segment hat function."""
    g = as_edgewise(values)
    L = seg.edge_lengths
    out = np.zeros(seg.n_nodes)
    out[:-1] += L / 6.0 * (2.0 * g[:, 0] + g[:, 1])
    out[1:] += L / 6.0 * (g[:, 0] + 2.0 * g[:, 1])
    return out


def outward_edge_normals(mesh: Mesh, ids: np.ndarray) -> np.ndarray:
    """Unit outward normals of the polygon edges (ids[k], ids[k+1])."""
    opposite = {}
    for a, b, c in mesh.triangles.tolist():
        opposite[(min(a, b), max(a, b))] = c
        opposite[(min(b, c), max(b, c))] = a
        opposite[(min(c, a), max(c, a))] = b
    p = mesh.nodes[ids]
    d = np.diff(p, axis=0)
    nrm = np.column_stack([d[:, 1], -d[:, 0]]) / np.linalg.norm(d, axis=1)[:, None]
    for k in range(len(d)):
        a, b = int(ids[k]), int(ids[k + 1])
        inward = mesh.nodes[opposite[(min(a, b), max(a, b))]] - 0.5 * (p[k] + p[k + 1])
        if np.dot(nrm[k], inward) > 0:
            nrm[k] = -nrm[k]
    return nrm


def corner_nodes(seg: BoundarySegment, mesh: Mesh) -> np.ndarray:
    """Interior path positions where the boundary turns by more than CORNER_ANGLE."""
    d = np.diff(seg.points(mesh), axis=0)
    d /= np.linalg.norm(d, axis=1)[:, None]
    cos_turn = np.sum(d[:-1] * d[1:], axis=1)
    return np.flatnonzero(cos_turn < np.cos(CORNER_ANGLE)) + 1


def _endpoint_derivative(u0, u1, u2, L1, L2):
    """d/ds at s=0 from values at s=0, L1, L1+L2 (second order)."""
    s1, s2 = L1, L1 + L2
    return -u0 * (s1 + s2) / (s1 * s2) + u1 * s2 / (s1 * (s2 - s1)) - u2 * s1 / (s2 * (s2 - s1))


def boundary_l2_norm(field, seg: BoundarySegment) -> float:
    values = field.values if isinstance(field, BoundaryField) else np.asarray(field)
    return float(np.sqrt(max(edgewise_inner(values, values, seg), 0.0)))


def boundary_h1_seminorm(field, seg: BoundarySegment) -> float:
    values = field.values if isinstance(field, BoundaryField) else np.asarray(field)
    g = as_edgewise(values)
    slope = (g[:, 1] - g[:, 0]) / seg.edge_lengths
    return float(np.sqrt(np.dot(seg.edge_lengths, slope**2)))


# ---------------------------------------------------------------------------
# assembly and solves
# ---------------------------------------------------------------------------

def assemble(mesh: Mesh, mu: float):
    """Global stiffness and mass matrices (CSR)."""
    K_loc, M_loc, _ = _kernels.p1_local(
        np.ascontiguousarray(mesh.nodes, dtype=float),
        np.ascontiguousarray(mesh.triangles, dtype=np.int64),
    )
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    N = mesh.n_nodes
    K = sp.coo_matrix((K_loc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    M = sp.coo_matrix((M_loc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    return K, M


class FactorizedOperator:
    """Reduced, factorized system for one mesh, coefficient and Dirichlet tag.

    Immutable after construction.  ``solve`` may be called from several
    threads; the triangular solves are serialized internally.
    """

    def __init__(self, mesh: Mesh, mu: float, dirichlet_tag: Tag):
        dirichlet_tag = Tag(dirichlet_tag)
        self.mesh = mesh
        self.mu = float(mu)
        self.dirichlet_tag = dirichlet_tag
        self.neumann_tag = dirichlet_tag.other
        self.seg_d = boundary_segment(mesh, dirichlet_tag)
        self.seg_n = boundary_segment(mesh, self.neumann_tag)

        K, M = assemble(mesh, self.mu)
        self.A = (K + self.mu * M).tocsr()
        is_d = np.zeros(mesh.n_nodes, dtype=bool)
        is_d[self.seg_d.node_ids] = True
        self.dirichlet_nodes = self.seg_d.node_ids
        self.free_nodes = np.flatnonzero(~is_d)
        self.A_ff = self.A[self.free_nodes][:, self.free_nodes].tocsc()
        self.A_fd = self.A[self.free_nodes][:, self.dirichlet_nodes].tocsr()

        try:
            self._lu = spla.splu(
                self.A_ff,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise EigenvalueProximityError(
                f"factorization failed for mu={self.mu}: {exc}"
            ) from None
        self.pivots = self._lu.U.diagonal().copy()
        scale = abs(self.A_ff).max()
        if np.min(np.abs(self.pivots)) < PIVOT_RTOL * scale:
            raise EigenvalueProximityError(
                f"near-singular pivot for mu={self.mu}: "
                f"min |pivot| = {np.min(np.abs(self.pivots)):.3e}, max |A| = {scale:.3e}"
            )
        self._mass_d = segment_mass(self.seg_d)
        self._mass_d_factor = sla.cho_factor(self._mass_d)
        self._corners = corner_nodes(self.seg_d, mesh)
        self._normals_d = outward_edge_normals(mesh, self.seg_d.node_ids)
        self._lock = threading.Lock()
        self.n_solves = 0

    def segment(self, tag: Tag) -> BoundarySegment:
        return self.seg_d if Tag(tag) is self.dirichlet_tag else self.seg_n

    def solve(self, dirichlet_values, neumann_values) -> FemSolution:
        d = _values(dirichlet_values, self.seg_d)
        if d.ndim != 1:
            raise InvalidArgument("Dirichlet data must be nodal")
        g = _values(neumann_values, self.seg_n)
        load = np.zeros(self.mesh.n_nodes)
        load[self.seg_n.node_ids] = segment_load(g, self.seg_n)
        rhs = load[self.free_nodes] - self.A_fd @ d
        with self._lock:
            u_f = self._lu.solve(rhs)
            self.n_solves += 1
        u = np.empty(self.mesh.n_nodes)
        u[self.free_nodes] = u_f
        u[self.dirichlet_nodes] = d
        return FemSolution(u, load, np.array(g, dtype=float))

    def recover_flux(self, solution: FemSolution, tag: Tag) -> BoundaryField:
        """Outward normal flux on a segment.

        On the Neumann segment this is the imposed data.  On the Dirichlet
        segment the flux lambda solves <lambda, v> = a(u_h, v) - l(v) for the
        boundary hat functions v.  Where the path has corners lambda may
        jump; the jump is taken from the corner gradient implied by the
        tangential derivatives of u_h along both sides, and the field is
        returned edgewise.
        """
        tag = Tag(tag)
        if tag is not self.dirichlet_tag:
            return BoundaryField(tag, solution.neumann_data.copy())
        seg = self.seg_d
        ids = seg.node_ids
        r = self.A[ids] @ solution.u - solution.load[ids]
        if len(self._corners) == 0:
            return BoundaryField(tag, sla.cho_solve(self._mass_d_factor, r))
        L = seg.edge_lengths
        uu = solution.u[ids]
        pts = seg.points(self.mesh)
        jumps = {}
        for k in self._corners:
            t_in = (pts[k] - pts[k - 1]) / L[k - 1]
            t_out = (pts[k + 1] - pts[k]) / L[k]
            if k >= 2:
                d_in = -_endpoint_derivative(uu[k], uu[k - 1], uu[k - 2], L[k - 1], L[k - 2])
            else:
                d_in = (uu[k] - uu[k - 1]) / L[k - 1]
            if k + 2 < len(uu):
                d_out = _endpoint_derivative(uu[k], uu[k + 1], uu[k + 2], L[k], L[k + 1])
            else:
                d_out = (uu[k + 1] - uu[k]) / L[k]
            grad = np.linalg.solve(np.array([t_in, t_out]), np.array([d_in, d_out]))
            J = float(grad @ (self._normals_d[k] - self._normals_d[k - 1]))
            jumps[int(k)] = J
            r[k] -= L[k] / 3.0 * J
            r[k + 1] -= L[k] / 6.0 * J
        lam = sla.cho_solve(self._mass_d_factor, r)
        out = as_edgewise(lam).copy()
        for k, J in jumps.items():
            out[k, 0] += J
        return BoundaryField(tag, out)


def _values(field, seg):
    if isinstance(field, BoundaryField):
        field.check(seg)
        return field.values
    values = np.asarray(field, dtype=float)
    BoundaryField(seg.tag, values).check(seg)
    return values


def assemble_and_factorize(mesh: Mesh, mu: float, dirichlet_tag: Tag) -> FactorizedOperator:
    return FactorizedOperator(mesh, mu, dirichlet_tag)


def solve(op: FactorizedOperator, dirichlet_values, neumann_values) -> FemSolution:
    return op.solve(dirichlet_values, neumann_values)


def trace(solution: FemSolution, mesh: Mesh, tag: Tag) -> BoundaryField:
    seg = boundary_segment(mesh, tag)
    return BoundaryField(seg.tag, solution.u[seg.node_ids].copy())


def recover_flux(op: FactorizedOperator, solution: FemSolution, tag: Tag) -> BoundaryField:
    return op.recover_flux(solution, tag)


# ---------------------------------------------------------------------------
# domain error
# ---------------------------------------------------------------------------

# degree-5 Dunavant rule on the reference triangle (barycentric, weights sum to 1)
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
_QUAD_BARY = np.array(
    [[1 / 3, 1 / 3, 1 / 3],
     [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
     [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2]]
)
_QUAD_W = np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3)


def domain_l2_error(mesh: Mesh, u_h: np.ndarray, exact) -> float:
    """L2(Omega_h) norm of u_h - exact, with ``exact(x, y)`` vectorized."""
    p = mesh.nodes[mesh.triangles]  # (T, 3, 2)
    q = np.einsum("qi,tid->tqd", _QUAD_BARY, p)
    uh_q = np.einsum("qi,ti->tq", _QUAD_BARY, u_h[mesh.triangles])
    err = uh_q - exact(q[..., 0], q[..., 1])
    area = np.abs(mesh.areas())
    return float(np.sqrt(np.sum(area[:, None] * _QUAD_W[None, :] * err**2)))
