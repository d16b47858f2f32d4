"""Benchmark problems with closed-form solutions, and the noise model."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import InvalidArgument
from .fem import BoundaryField, outward_edge_normals
from .mesh import Mesh, Tag, boundary_segment, detect_geometry


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    geometry: str
    mu: float
    exact_u: Callable
    exact_grad: Callable


def _square_u(x, y):
    return np.exp(2.0 * x - y)


def _square_grad(x, y):
    e = np.exp(2.0 * x - y)
    return 2.0 * e, -e


def _disc_u(x, y):
    return np.sin(x) * np.sin(y)


def _disc_grad(x, y):
    return np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)


CASES = {
    # -Lap(u) + 5u = 0: modified Helmholtz
    "square": BenchmarkCase("square", "square", 5.0, _square_u, _square_grad),
    # -Lap(u) - 2u = 0: Helmholtz with wave number sqrt(2)
    "disc": BenchmarkCase("disc", "disc", -2.0, _disc_u, _disc_grad),
}


def make_case(name: str) -> BenchmarkCase:
    try:
        return CASES[name.lower()]
    except KeyError:
        raise InvalidArgument(f"unknown case {name!r}; expected one of {sorted(CASES)}") from None


@dataclass(frozen=True, eq=False)
class CauchyData:
    """Trace ``f`` (nodal) and flux ``g`` (edgewise) measured on Gamma_c."""

    f: BoundaryField
    g: BoundaryField
    noise_level: float = 0.0
    seed: int | None = None


@dataclass(frozen=True, eq=False)
class TargetData:
    phi_d: BoundaryField
    phi_n: BoundaryField


def _edgewise_flux(case: BenchmarkCase, mesh: Mesh, geometry: str, ids: np.ndarray) -> np.ndarray:
    p = mesh.nodes[ids]
    gx, gy = case.exact_grad(p[:, 0], p[:, 1])
    if geometry == "disc":
        r = np.linalg.norm(p, axis=1)
        dn = (gx * p[:, 0] + gy * p[:, 1]) / r
        return np.column_stack([dn[:-1], dn[1:]])
    nrm = outward_edge_normals(mesh, ids)
    left = gx[:-1] * nrm[:, 0] + gy[:-1] * nrm[:, 1]
    right = gx[1:] * nrm[:, 0] + gy[1:] * nrm[:, 1]
    return np.column_stack([left, right])


def synthesize_data(case: BenchmarkCase, mesh: Mesh) -> tuple[CauchyData, TargetData]:
    """Exact Cauchy data on Gamma_c and target data on Gamma_i.

    Normals are the side normals on the square and the radial direction on
    the disc.  Fluxes are stored edgewise on Gamma_c so the jump of the
    normal at square corners is represented exactly.
    """
    geometry = detect_geometry(mesh)
    if geometry != case.geometry:
        raise InvalidArgument(f"case {case.name!r} needs a {case.geometry} mesh, got {geometry}")
    seg_c = boundary_segment(mesh, Tag.C)
    seg_i = boundary_segment(mesh, Tag.I)
    pc = mesh.nodes[seg_c.node_ids]
    pi = mesh.nodes[seg_i.node_ids]
    f = case.exact_u(pc[:, 0], pc[:, 1])
    g = _edgewise_flux(case, mesh, geometry, seg_c.node_ids)
    phi_d = case.exact_u(pi[:, 0], pi[:, 1])
    gx, gy = case.exact_grad(pi[:, 0], pi[:, 1])
    if geometry == "disc":
        phi_n = (gx * pi[:, 0] + gy * pi[:, 1]) / np.linalg.norm(pi, axis=1)
    else:
        # Gamma_i is a straight side; every edge shares one normal
        nrm = outward_edge_normals(mesh, seg_i.node_ids)[0]
        phi_n = gx * nrm[0] + gy * nrm[1]
    data = CauchyData(BoundaryField(Tag.C, f), BoundaryField(Tag.C, g))
    target = TargetData(BoundaryField(Tag.I, phi_d), BoundaryField(Tag.I, phi_n))
    return data, target


def add_noise(data: CauchyData, nu: float, seed: int) -> CauchyData:
    """Multiply every value of f and g by (1 + theta*nu), theta ~ U[-1, 1].

    Draws come from numpy's PCG64 generator seeded with ``seed``: first one
    per f value, then one per g value, in storage order.
    """
    if not nu >= 0.0:
        raise InvalidArgument(f"noise level must be >= 0, got {nu}")
    if nu == 0.0:
        return replace(data, noise_level=0.0, seed=seed)
    rng = np.random.default_rng(seed)
    theta_f = rng.uniform(-1.0, 1.0, size=data.f.values.shape)
    theta_g = rng.uniform(-1.0, 1.0, size=data.g.values.shape)
    f = data.f.values * (1.0 + theta_f * nu)
    g = data.g.values * (1.0 + theta_g * nu)
    return CauchyData(
        BoundaryField(data.f.tag, f), BoundaryField(data.g.tag, g), float(nu), seed
    )


def write_field_csv(path, field: BoundaryField, seg) -> None:
    """CSV with columns s, t, value; edgewise fields give two rows per edge."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "t", "value"])
        if field.edgewise:
            for k, (a, b) in enumerate(field.values.tolist()):
                w.writerow([f"{seg.s[k]:.17g}", f"{seg.t[k]:.17g}", f"{a:.17g}"])
                w.writerow([f"{seg.s[k + 1]:.17g}", f"{seg.t[k + 1]:.17g}", f"{b:.17g}"])
        else:
            for s, t, v in zip(seg.s, seg.t, field.values):
                w.writerow([f"{s:.17g}", f"{t:.17g}", f"{v:.17g}"])
