"""First-order spinor operator under chirality boundary conditions.

In a conformally flat metric e^{2 phi} (flat), the operator acting on a
spinor psi is

    D_g psi = e^{-phi} (D_flat psi + (1/2) (grad phi . c) psi)
            = e^{-3 phi / 2} D_flat (e^{phi/2} psi),

with c the Clifford generators.  Two discretizations of it coexist here
and are used for different purposes:

* A1: the Galerkin pairing int <D_g psi, chi> dv_g with a vertex-rule
  quadrature, symmetrized after eliminating the boundary conditions.
  Consistent as an *applied operator* (used pointwise and as a
  sign-resolving Rayleigh form), but its raw eigenvalues are polluted by
  spurious mid-gap modes, as is typical of naive P1 first-order forms.
* The squared pencil C vs. B built from the right-hand factorization
  above: C(psi, chi) = int e^{-f-phi} <D_flat(e^{phi/2} psi),
  D_flat(e^{phi/2} chi)> dx against the lumped weighted mass
  B = diag(A_v e^{f + 2 phi_v}).  This elliptic form has a clean
  spectrum equal to the squares of the weighted eigenvalues and is the
  basis of all spectral computations (see spectral.py).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .clifford import CliffordFrame, constraint_basis, default_frame, flatten_spinor, unflatten_spinor
from .curvature import boundary_lumped_lengths, lumped_areas
from .mesh import TriMesh, triangle_geometry, vertex_normals


@dataclass(frozen=True)
class DiracOperator:
    """Assembled spinor forms for one (mesh, phi, chirality sign).

    A1            -- constrained, symmetrized first-order pairing (Hermitian)
    A1_ambient    -- unconstrained pairing over all 2V components
    herm_defect   -- max |A1_raw - A1_raw^H| before symmetrization, O(h)
    GE            -- per-triangle flat Dirac composed with e^{phi/2} scaling
    P, cmap       -- boundary-constraint isometry and DOF -> vertex map
    mass_g_diag   -- lumped spinor mass weights A_v e^{2 phi_v}
    """

    mesh: TriMesh
    phi: np.ndarray
    sign: int
    frame: CliffordFrame
    A1: sp.csr_matrix
    A1_ambient: sp.csr_matrix
    herm_defect: float
    GE: sp.csr_matrix
    tri_area: np.ndarray
    tri_phi: np.ndarray
    P: sp.csr_matrix
    cmap: np.ndarray
    lumped_flat: np.ndarray
    mass_g_diag: np.ndarray

    @property
    def num_constrained(self) -> int:
        return self.P.shape[1]

    def constrained_mass(self, f) -> np.ndarray:
        """Diagonal of the weighted spinor mass e^{f} dv_g on constrained DOF."""
        f = np.asarray(f, dtype=float)
        return (self.lumped_flat * np.exp(f + 2 * self.phi))[self.cmap]


def _flat_dirac_blocks(mesh: TriMesh, frame: CliffordFrame):
    """Per-triangle constant matrices of the flat Dirac on P1 spinors."""
    area, grad = triangle_geometry(mesh)
    blocks = []
    for w in range(3):
        Gm = np.einsum("ab,t->tab", frame.c1, grad[:, w, 0]) + np.einsum(
            "ab,t->tab", frame.c2, grad[:, w, 1]
        )
        blocks.append(Gm)
    return area, grad, blocks


def assemble_dirac(mesh: TriMesh, phi, sign: int = +1, frame: CliffordFrame | None = None) -> DiracOperator:
    """Build the constrained first-order form and the squared-form factors.

    The vertex-rule pairing at test vertex u collects (area/3) e^{phi_u}
    times the elementwise flat Dirac plus the connection term
    (1/2)(grad phi . c) evaluated with the P1 gradient of phi.  The raw
    constrained matrix is Hermitian only up to O(h); the defect is
    recorded and the symmetrized half-sum is kept.
    """
    frame = frame or default_frame()
    phi = np.asarray(phi, dtype=float)
    V = mesh.num_vertices
    nT = mesh.num_triangles
    t = mesh.triangles
    area, grad, blocks = _flat_dirac_blocks(mesh, frame)

    # flat per-triangle Dirac of the e^{phi/2}-scaled spinor
    rows = np.empty(nT * 3 * 4, dtype=np.int64)
    cols = np.empty_like(rows)
    vals = np.empty(nT * 3 * 4, dtype=complex)
    k = 0
    for w in range(3):
        Gm = blocks[w]
        for a in range(2):
            for b in range(2):
                rows[k : k + nT] = 2 * np.arange(nT) + a
                cols[k : k + nT] = 2 * t[:, w] + b
                vals[k : k + nT] = Gm[:, a, b]
                k += nT
    Gop = sp.csr_matrix((vals, (rows, cols)), shape=(2 * nT, 2 * V))
    E = sp.diags(np.repeat(np.exp(0.5 * phi), 2))
    GE = (Gop @ E).tocsr()

    # curved first-order pairing, vertex-rule quadrature
    gphi_x = np.einsum("ti,ti->t", grad[:, :, 0], phi[t])
    gphi_y = np.einsum("ti,ti->t", grad[:, :, 1], phi[t])
    conn = 0.5 * (
        np.einsum("ab,t->tab", frame.c1, gphi_x)
        + np.einsum("ab,t->tab", frame.c2, gphi_y)
    )
    rows2, cols2, vals2 = [], [], []
    for u in range(3):
        wu = area / 3 * np.exp(phi[t[:, u]])
        for w in range(3):
            Gm = blocks[w]
            for a in range(2):
                for b in range(2):
                    rows2.append(2 * t[:, u] + a)
                    cols2.append(2 * t[:, w] + b)
                    vals2.append(wu * Gm[:, a, b])
        for a in range(2):
            for b in range(2):
                rows2.append(2 * t[:, u] + a)
                cols2.append(2 * t[:, u] + b)
                vals2.append(wu * conn[:, a, b])
    A1_amb = sp.csr_matrix(
        (np.concatenate(vals2), (np.concatenate(rows2), np.concatenate(cols2))),
        shape=(2 * V, 2 * V),
    )

    P, cmap = constraint_basis(mesh, sign, frame)
    A1_raw = (P.conj().T @ A1_amb @ P).tocsr()
    herm_defect = float(np.abs((A1_raw - A1_raw.conj().T).data).max())
    A1 = (0.5 * (A1_raw + A1_raw.conj().T)).tocsr()

    lump = lumped_areas(mesh)
    tri_phi = phi[t].mean(axis=1)
    return DiracOperator(
        mesh=mesh,
        phi=phi,
        sign=sign,
        frame=frame,
        A1=A1,
        A1_ambient=A1_amb,
        herm_defect=herm_defect,
        GE=GE,
        tri_area=area,
        tri_phi=tri_phi,
        P=P,
        cmap=cmap,
        lumped_flat=lump,
        mass_g_diag=lump * np.exp(2 * phi),
    )


def squared_pencil(D: DiracOperator, f):
    """Elliptic pencil (C, B) whose eigenvalues are squared Dirac eigenvalues.

    C is the constrained matrix of
    int e^{-f-phi} <D_flat(e^{phi/2} psi), D_flat(e^{phi/2} chi)> dx
    with the weight evaluated at triangle centroids, and B the lumped
    diagonal of the e^{f} dv_g spinor mass.
    """
    f = np.asarray(f, dtype=float)
    fT = f[D.mesh.triangles].mean(axis=1)
    wT = D.tri_area * np.exp(-fT - D.tri_phi)
    W = sp.diags(np.repeat(wT, 2))
    C = (D.GE.conj().T @ W @ D.GE).tocsr()
    Cc = (D.P.conj().T @ C @ D.P).tocsr()
    Cc = (0.5 * (Cc + Cc.conj().T)).tocsr()
    Bd = D.constrained_mass(f)
    return Cc, Bd


def dirac_apply(D: DiracOperator, psi) -> np.ndarray:
    """Pointwise application of D_g to a (V, 2) spinor field.

    Divides the ambient vertex-rule pairing by the lumped spinor mass;
    no boundary condition is imposed.  Second-order accurate away from
    the boundary, first-order in L^2 overall.
    """
    flat = flatten_spinor(psi)
    out = D.A1_ambient @ flat
    return unflatten_spinor(out) / D.mass_g_diag[:, None]


def conformal_push(psi, dphi) -> np.ndarray:
    """Spinor companion of the metric change g -> e^{2 dphi} g."""
    psi = np.asarray(psi, dtype=complex)
    dphi = np.asarray(dphi, dtype=float)
    return np.exp(-0.5 * dphi)[:, None] * psi


def boundary_pairing(D: DiracOperator, psi, chi) -> complex:
    """int <(n . c) psi, chi> ds_g over the whole boundary (lumped).

    Vanishes identically when both arguments satisfy the chirality
    condition, which is the discrete footprint of self-adjointness.
    """
    psi = np.asarray(psi, dtype=complex)
    chi = np.asarray(chi, dtype=complex)
    normals = vertex_normals(D.mesh)
    ells = boundary_lumped_lengths(D.mesh)
    total = 0.0 + 0.0j
    for loop, ell in zip(D.mesh.boundary_loops, ells):
        for k, v in enumerate(loop):
            n = normals[int(v)]
            mat = n[0] * D.frame.c1 + n[1] * D.frame.c2
            total += ell[k] * np.exp(D.phi[v]) * np.vdot(mat @ psi[v], chi[v])
    return complex(total)


def project_boundary_conditions(D: DiracOperator, psi) -> np.ndarray:
    """Pointwise orthogonal projection of a (V,2) field onto the BC subspace."""
    flat = flatten_spinor(psi)
    return unflatten_spinor(D.P @ (D.P.conj().T @ flat))
