"""Triangulations of the unit square and unit disc with tagged boundaries.

Boundary edges are tagged either ``Tag.I`` (inaccessible part, where the
unknown data lives) or ``Tag.C`` (accessible part, where Cauchy data is
measured).  Edges are stored in counter-clockwise loop order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgument, NotFound


class Tag(str, enum.Enum):
    I = "I"  # noqa: E741
    C = "C"

    @property
    def other(self) -> "Tag":
        return Tag.C if self is Tag.I else Tag.I


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray  # (N, 2) float
    triangles: np.ndarray  # (T, 3) int, counter-clockwise
    edges: np.ndarray  # (E, 2) int, boundary edges in loop order
    edge_tags: tuple  # (E,) of Tag or None
    geometry: str = "custom"

    def __post_init__(self):
        for name in ("nodes", "triangles", "edges"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def h(self) -> float:
        """Longest edge length over all triangles."""
        p = self.nodes[self.triangles]
        lens = np.linalg.norm(p - np.roll(p, -1, axis=1), axis=2)
        return float(lens.max())

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.edges]
        return np.linalg.norm(p[:, 1] - p[:, 0], axis=1)

    def tag_length(self, tag: Tag) -> float:
        mask = np.array([t is tag for t in self.edge_tags], dtype=bool)
        return float(self.edge_lengths()[mask].sum())


@dataclass(frozen=True, eq=False)
class BoundarySegment:
    """An open boundary path made of all edges with one tag.

    ``s`` is the arclength along the (polygonal) path and ``t = 2 s / L - 1``
    is the normalized coordinate used by the polynomial parameterization.
    """

    tag: Tag
    node_ids: np.ndarray
    s: np.ndarray
    t: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "t", 2.0 * self.s / self.length - 1.0)

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.diff(self.s)

    def points(self, mesh: Mesh) -> np.ndarray:
        return mesh.nodes[self.node_ids]


def build_unit_square_mesh(n: int) -> Mesh:
    """Structured mesh of (0,1)^2 with ``n`` subdivisions per side.

    All edges on ``x = 0`` belong to the inaccessible part; the corner nodes
    (0,0) and (0,1) are endpoints shared with the accessible part.
    """
    if n < 2:
        raise InvalidArgument(f"square mesh needs n >= 2, got {n}")
    g = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(g, g)  # row j <-> y_j
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    ii, jj = np.meshgrid(np.arange(n), np.arange(n))
    ii, jj = ii.ravel(), jj.ravel()
    v00, v10 = vid(ii, jj), vid(ii + 1, jj)
    v01, v11 = vid(ii, jj + 1), vid(ii + 1, jj + 1)
    tris = np.concatenate(
        [np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])]
    )

    loop = (
        [vid(i, 0) for i in range(n)]
        + [vid(n, j) for j in range(n)]
        + [vid(i, n) for i in range(n, 0, -1)]
        + [vid(0, j) for j in range(n, 0, -1)]
    )
    edges = np.column_stack([loop, np.roll(loop, -1)])
    tags = tuple(Tag.I if i >= 3 * n else Tag.C for i in range(4 * n))
    return Mesh(nodes, tris.astype(np.int64), edges.astype(np.int64), tags, "square")


def _zip_rings(inner, inner_ang, outer, outer_ang, nodes):
    """Triangulate the annulus strip between two closed rings of nodes."""
    na, nb = len(inner), len(outer)
    tris = []
    i = j = 0
    two_pi = 2.0 * math.pi
    while i < na or j < nb:
        a_next = inner_ang[i + 1] if i + 1 < na else inner_ang[0] + two_pi
        b_next = outer_ang[j + 1] if j + 1 < nb else outer_ang[0] + two_pi
        if i < na and (j >= nb or a_next <= b_next):
            tri = [inner[i], outer[j % nb], inner[(i + 1) % na]]
            i += 1
        else:
            tri = [inner[i % na], outer[j], outer[(j + 1) % nb]]
            j += 1
        tris.append(tri)
    tris = np.array(tris, dtype=np.int64)
    p = nodes[tris]
    det = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 1, 1] - p[:, 0, 1]
    ) * (p[:, 2, 0] - p[:, 0, 0])
    flip = det < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def build_unit_disc_mesh(n: int) -> Mesh:
    """Concentric-ring mesh of the unit disc with ``n`` boundary segments.

    Boundary nodes sit at angles 2*pi*k/n.  The number of rings is
    ``round(n / 2pi)`` so radial and tangential spacing match; ring ``j``
    carries about ``n * j / m`` nodes.  Edges whose midpoint angle lies in
    (0, pi/2) are inaccessible.
    """
    if n < 16 or n % 4:
        raise InvalidArgument(f"disc mesh needs n >= 16 and n % 4 == 0, got {n}")
    m = max(1, round(n / (2.0 * math.pi)))
    nodes = [np.zeros((1, 2))]
    rings, angles = [], []
    start = 1
    for j in range(1, m + 1):
        nj = n if j == m else max(3, round(n * j / m))
        ang = 2.0 * math.pi * np.arange(nj) / nj
        r = j / m
        pts = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        pts[np.abs(pts) < 1e-15] = 0.0
        nodes.append(pts)
        rings.append(np.arange(start, start + nj))
        angles.append(ang)
        start += nj
    nodes = np.concatenate(nodes)

    first = rings[0]
    tris = [np.column_stack([np.zeros(len(first), dtype=np.int64), first, np.roll(first, -1)])]
    for j in range(1, m):
        tris.append(_zip_rings(rings[j - 1], angles[j - 1], rings[j], angles[j], nodes))
    tris = np.concatenate(tris).astype(np.int64)

    bnd = rings[-1]
    edges = np.column_stack([bnd, np.roll(bnd, -1)]).astype(np.int64)
    mid = (np.arange(n) + 0.5) * 2.0 * math.pi / n
    tags = tuple(Tag.I if 0.0 < a < 0.5 * math.pi else Tag.C for a in mid)
    return Mesh(nodes, tris, edges, tags, "disc")


def _topological_boundary(triangles):
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    key = np.sort(e, axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    return {tuple(x) for x in uniq[counts == 1]}


def validate(mesh: Mesh) -> list[str]:
    """List every violated mesh invariant; empty when the mesh is sound."""
    problems = []
    if not np.all(np.isfinite(mesh.nodes)):
        problems.append("non-finite node coordinates")
    for k in np.flatnonzero(mesh.areas() <= 0.0):
        problems.append(f"negative area: triangle {k} {mesh.triangles[k].tolist()}")

    edges = [tuple(int(v) for v in e) for e in mesh.edges]
    topo = _topological_boundary(mesh.triangles)
    declared = {tuple(sorted(e)) for e in edges}
    for e in sorted(topo - declared):
        problems.append(f"boundary not covered: edge {e} missing from boundary edges")
    for e in sorted(declared - topo):
        problems.append(f"boundary not covered: edge {e} is not a topological boundary edge")
    for k in range(len(edges)):
        if edges[k][1] != edges[(k + 1) % len(edges)][0]:
            problems.append(f"open loop: boundary edge {k} does not connect to edge {(k + 1) % len(edges)}")
            break
    if len({e[0] for e in edges}) != len(edges):
        problems.append("open loop: boundary loop visits a node twice")

    if len(mesh.edge_tags) != len(edges):
        problems.append("missing tag: tag count differs from edge count")
    for k, t in enumerate(mesh.edge_tags):
        if not isinstance(t, Tag):
            problems.append(f"missing tag: boundary edge {k} {edges[k]}")
    present = {t for t in mesh.edge_tags if isinstance(t, Tag)}
    for t in Tag:
        if t not in present:
            problems.append(f"empty tag: no edge tagged {t.value}")
    if present == set(Tag) and mesh.tag_length(Tag.C) < mesh.tag_length(Tag.I):
        problems.append("tag lengths: accessible part shorter than inaccessible part")
    return problems


def boundary_segment(mesh: Mesh, tag: Tag) -> BoundarySegment:
    """Ordered path of the edges carrying ``tag``.

    The path runs counter-clockwise unless that would start it at the
    endpoint with larger y (then x); i.e. it always starts at its "lowest"
    endpoint.  Square Gamma_i therefore runs by increasing y and disc
    Gamma_i by increasing angle.
    """
    tag = Tag(tag)
    mask = np.array([t is tag for t in mesh.edge_tags], dtype=bool)
    if not mask.any():
        raise NotFound(f"no boundary edge tagged {tag.value}")
    E = len(mask)
    if mask.all():
        raise InvalidArgument("tag covers the whole boundary; segment is not an open path")
    # rotate the loop so it starts at the first tagged edge after an untagged one
    starts = [k for k in range(E) if mask[k] and not mask[k - 1]]
    if len(starts) != 1:
        raise InvalidArgument(f"edges tagged {tag.value} do not form one contiguous path")
    k0 = starts[0]
    run = []
    k = k0
    while mask[k % E]:
        run.append(k % E)
        k += 1
    ids = [int(mesh.edges[run[0], 0])] + [int(mesh.edges[r, 1]) for r in run]
    ids = np.array(ids, dtype=np.int64)
    a, b = mesh.nodes[ids[0]], mesh.nodes[ids[-1]]
    if (a[1], a[0]) > (b[1], b[0]):
        ids = ids[::-1].copy()
    p = mesh.nodes[ids]
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(p, axis=0), axis=1))])
    ids.setflags(write=False)
    s.setflags(write=False)
    return BoundarySegment(tag, ids, s)


def detect_geometry(mesh: Mesh) -> str:
    """Classify a mesh as "square", "disc" or "custom" from its coordinates."""
    if mesh.geometry != "custom":
        return mesh.geometry
    b = mesh.nodes[mesh.edges[:, 0]]
    if np.allclose(np.linalg.norm(b, axis=1), 1.0, atol=1e-12):
        return "disc"
    lo, hi = mesh.nodes.min(axis=0), mesh.nodes.max(axis=0)
    if np.allclose(lo, 0.0, atol=1e-12) and np.allclose(hi, 1.0, atol=1e-12):
        return "square"
    return "custom"


def write_mesh(mesh: Mesh, path) -> None:
    """Write the plain-text mesh format (header ``N T E``, then node,
    triangle and boundary-edge lines)."""
    lines = [f"{mesh.n_nodes} {len(mesh.triangles)} {len(mesh.edges)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    for (a, b), t in zip(mesh.edges.tolist(), mesh.edge_tags):
        lines.append(f"{a} {b} {t.value if isinstance(t, Tag) else '-'}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_mesh(path) -> Mesh:
    tokens = Path(path).read_text(encoding="ascii").split("\n")
    rows = [ln.split() for ln in tokens if ln.strip()]
    try:
        N, T, E = (int(v) for v in rows[0])
        nodes = np.array([[float(v) for v in r] for r in rows[1 : 1 + N]], dtype=float)
        tris = np.array([[int(v) for v in r] for r in rows[1 + N : 1 + N + T]], dtype=np.int64)
        erows = rows[1 + N + T : 1 + N + T + E]
        edges = np.array([[int(r[0]), int(r[1])] for r in erows], dtype=np.int64)
        tags = tuple(Tag(r[2]) if r[2] in ("I", "C") else None for r in erows)
    except (ValueError, IndexError) as exc:
        raise InvalidArgument(f"malformed mesh file {path}: {exc}") from None
    if nodes.shape != (N, 2) or tris.shape != (T, 3) or edges.shape != (E, 2):
        raise InvalidArgument(f"malformed mesh file {path}: counts do not match header")
    mesh = Mesh(nodes, tris.reshape(T, 3), edges.reshape(E, 2), tags)
    return Mesh(mesh.nodes, mesh.triangles, mesh.edges, tags, detect_geometry(mesh))
