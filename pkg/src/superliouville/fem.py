"""P1 finite-element forms for scalar fields on a conformally flat mesh.

All matrices are assembled once per (mesh, phi) pair and kept immutable.
Integrals of pointwise nonlinear expressions (exponentials of fields)
use the lumped vertex measures so that Newton Hessians stay diagonal in
those terms; bilinear pairings use the consistent matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .curvature import boundary_lumped_lengths, flat_stiffness, lumped_areas
from .mesh import TriMesh, triangle_geometry


@dataclass(frozen=True)
class FemOperators:
    """Assembled scalar-field forms for one (mesh, phi).

    stiffness        -- flat cotangent stiffness S (conformal invariant)
    mass_g           -- consistent P1 mass with P1-interpolated weight e^{2 phi}
    boundary_mass_g  -- per-loop consistent 1-D mass with weight e^{phi}
    lumped_flat      -- flat vertex areas A_v
    lumped_g         -- weighted vertex areas A_v e^{2 phi_v}
    boundary_lumped_g-- per-loop weighted vertex lengths l_v e^{phi_v}
    """

    mesh: TriMesh
    phi: np.ndarray
    stiffness: sp.csr_matrix
    mass_g: sp.csr_matrix
    boundary_mass_g: list
    lumped_flat: np.ndarray
    lumped_g: np.ndarray
    boundary_lumped_g: list

    @property
    def area_g(self) -> float:
        return float(self.lumped_g.sum())

    @property
    def boundary_length_g(self) -> float:
        return float(sum(bl[1].sum() for bl in self.boundary_lumped_g))


class AssemblyError(Exception):
    pass


def _weighted_mass(mesh: TriMesh, weight: np.ndarray) -> sp.csr_matrix:
    """Consistent P1 mass with the weight itself interpolated in P1.

    Uses the exact triangle integrals of products of three hat
    functions: all-distinct A/60, one repeat A/30, triple A/10.
    """
    area, _ = triangle_geometry(mesh)
    if np.any(area <= 0):
        raise AssemblyError("degenerate triangle (nonpositive area)")
    t = mesh.triangles
    w = weight[t]  # (F, 3)
    V = mesh.num_vertices
    rows, cols, vals = [], [], []
    for i in range(3):
        for j in range(3):
            if i == j:
                others = [k for k in range(3) if k != i]
                coef = area * (w[:, i] / 10 + (w[:, others[0]] + w[:, others[1]]) / 30)
            else:
                k = 3 - i - j
                coef = area * ((w[:, i] + w[:, j]) / 30 + w[:, k] / 60)
            rows.append(t[:, i])
            cols.append(t[:, j])
            vals.append(coef)
    M = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(V, V),
    )
    return M.tocsr()


def _weighted_boundary_mass(mesh: TriMesh, loop_id: int, weight: np.ndarray) -> sp.csr_matrix:
    """Consistent 1-D P1 mass on one boundary loop, weight P1-interpolated."""
    loop = mesh.boundary_loops[loop_id]
    p = mesh.vertices[loop]
    seg = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    a = loop
    b = np.roll(loop, -1)
    wa, wb = weight[a], weight[b]
    V = mesh.num_vertices
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate(
        [
            seg * (wa / 4 + wb / 12),
            seg * (wb / 4 + wa / 12),
            seg * (wa + wb) / 12,
            seg * (wa + wb) / 12,
        ]
    )
    return sp.coo_matrix((vals, (rows, cols)), shape=(V, V)).tocsr()


def assemble_operators(mesh: TriMesh, phi) -> FemOperators:
    """Build all scalar forms for the metric e^{2 phi} * (flat)."""
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (mesh.num_vertices,):
        raise ValueError(f"phi has shape {phi.shape}, expected ({mesh.num_vertices},)")
    if not np.all(np.isfinite(phi)):
        raise ValueError("phi contains non-finite values")
    S = flat_stiffness(mesh)
    M = _weighted_mass(mesh, np.exp(2 * phi))
    bmass = [
        _weighted_boundary_mass(mesh, k, np.exp(phi)) for k in range(mesh.num_loops)
    ]
    A = lumped_areas(mesh)
    ell = boundary_lumped_lengths(mesh)
    blg = [
        (mesh.boundary_loops[k], ell[k] * np.exp(phi[mesh.boundary_loops[k]]))
        for k in range(mesh.num_loops)
    ]
    return FemOperators(
        mesh=mesh,
        phi=phi,
        stiffness=S,
        mass_g=M,
        boundary_mass_g=bmass,
        lumped_flat=A,
        lumped_g=A * np.exp(2 * phi),
        boundary_lumped_g=blg,
    )


def _check_size(ops: FemOperators, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (ops.mesh.num_vertices,):
        raise ValueError(f"field has shape {u.shape}, expected ({ops.mesh.num_vertices},)")
    return u


def dirichlet_energy(ops: FemOperators, u) -> float:
    """Integral of |grad u|^2 dv_g; independent of phi in two dimensions."""
    u = _check_size(ops, u)
    return float(u @ (ops.stiffness @ u))


def integrate_g(ops: FemOperators, values) -> float:
    """Lumped integral of a per-vertex field against dv_g."""
    values = _check_size(ops, values)
    return float(ops.lumped_g @ values)


def boundary_integrate_g(ops: FemOperators, values, loop_id=None) -> float:
    """Lumped integral of a per-vertex field against ds_g (one loop or all)."""
    values = _check_size(ops, values)
    loops = range(ops.mesh.num_loops) if loop_id is None else [loop_id]
    total = 0.0
    for k in loops:
        idx, w = ops.boundary_lumped_g[k]
        total += float(w @ values[idx])
    return total


def h1_norm(ops: FemOperators, u) -> float:
    """sqrt(u^T S u + u^T M_g u): Dirichlet energy plus weighted L^2."""
    u = _check_size(ops, u)
    return float(np.sqrt(u @ (ops.stiffness @ u) + u @ (ops.mass_g @ u)))


def log_integral_exp(ops: FemOperators, w) -> float:
    """log of the lumped integral of e^{w} dv_g, overflow-guarded.

    Computed as m + log(sum A^g_v e^{w_v - m}) with m = max(w); the max
    is reinserted so arbitrarily large fields stay finite.
    """
    w = _check_size(ops, w)
    m = float(w.max())
    return m + float(np.log(np.sum(ops.lumped_g * np.exp(w - m))))


def log_boundary_integral_exp(ops: FemOperators, w) -> float:
    """log of the lumped boundary integral of e^{w} ds_g, overflow-guarded."""
    w = _check_size(ops, w)
    bidx = ops.mesh.boundary_vertices()
    m = float(w[bidx].max())
    total = 0.0
    for idx, weights in ops.boundary_lumped_g:
        total += float(np.sum(weights * np.exp(w[idx] - m)))
    return m + float(np.log(total))


def mt_inequality_gap(ops: FemOperators, u, mode: str = "interior") -> float:
    """Exponential-integrability gap of a field in the assembled metric.

    interior: log int e^{2u} dv_g - [ (1/2pi) int |grad u|^2 + (2/|M|_g) int u ]
    boundary: log int_bdry e^{u} ds_g - [ (1/4pi) int |grad u|^2 + (1/|bdry|_g) int_bdry u ]

    Both are invariant under u -> u + c.  The additive constant that
    would make either gap a sharp inequality is not modelled; callers
    bound the gap empirically over field ensembles.
    """
    u = _check_size(ops, u)
    dir_energy = dirichlet_energy(ops, u)
    if mode == "interior":
        lhs = log_integral_exp(ops, 2 * u)
        rhs = dir_energy / (2 * np.pi) + 2 * integrate_g(ops, u) / ops.area_g
    elif mode == "boundary":
        lhs = log_boundary_integral_exp(ops, u)
        rhs = dir_energy / (4 * np.pi) + boundary_integrate_g(ops, u) / ops.boundary_length_g
    else:
        raise ValueError(f"mode must be 'interior' or 'boundary', got {mode!r}")
    return lhs - rhs


def save_field_csv(path, values) -> None:
    values = np.asarray(values)
    with open(path, "w") as fh:
        fh.write("vertex_id,value\n")
        for i, v in enumerate(values):
            fh.write(f"{i},{float(v)!r}\n")


def load_field_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "vertex_id,value":
            raise ValueError(f"unexpected field CSV header: {header!r}")
        rows = [line.split(",") for line in fh if line.strip()]
    values = np.empty(len(rows))
    for idx, val in rows:
        values[int(idx)] = float(val)
    return values
