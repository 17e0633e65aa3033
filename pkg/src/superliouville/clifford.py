"""Clifford algebra of the plane and chirality boundary projections.

Spinors are per-vertex vectors in C^2 in a single global frame (the
rank-2 spinor bundle over a planar domain is trivial).  The two Clifford
generators are fixed anti-Hermitian matrices built from Pauli matrices;
the chirality operator G = i c1 c2 is then the constant diagonal sigma_3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .mesh import TriMesh, vertex_normals

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class CliffordFrame:
    """Generators c1, c2 with c_i c_j + c_j c_i = -2 delta_ij I.

    The chirality operator is G = i c1 c2: unitary, involutive, and
    anticommuting with both generators.
    """

    c1: np.ndarray = field(default_factory=lambda: 1j * SIGMA_1)
    c2: np.ndarray = field(default_factory=lambda: 1j * SIGMA_2)

    @property
    def chirality(self) -> np.ndarray:
        return 1j * self.c1 @ self.c2


def default_frame() -> CliffordFrame:
    return CliffordFrame()


def clifford_multiply(frame: CliffordFrame, X, psi):
    """Clifford action of a tangent vector (field) X on a spinor (field).

    X may be a single 2-vector or an (n, 2) array; psi a single C^2
    spinor or an (n, 2) array.  Broadcasting pairs them vertexwise.
    """
    X = np.asarray(X, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    if X.ndim == 1:
        mat = X[0] * frame.c1 + X[1] * frame.c2
        return psi @ mat.T
    mats = np.einsum("ab,n->nab", frame.c1, X[:, 0]) + np.einsum(
        "ab,n->nab", frame.c2, X[:, 1]
    )
    return np.einsum("nab,nb->na", mats, psi)


def normal_chirality(frame: CliffordFrame, normal) -> np.ndarray:
    """The 2x2 matrix of (n . c) G for a unit tangent-plane vector n."""
    normal = np.asarray(normal, dtype=float)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
        raise InputError(f"normal must be a unit vector, |n| = {np.linalg.norm(normal)}")
    return (normal[0] * frame.c1 + normal[1] * frame.c2) @ frame.chirality


def chirality_projectors(frame: CliffordFrame, normal):
    """B+- = (I +- (n.c) G)/2: complementary rank-1 projectors."""
    nG = normal_chirality(frame, normal)
    eye = np.eye(2, dtype=complex)
    return 0.5 * (eye + nG), 0.5 * (eye - nG)


def boundary_subspace_vector(frame: CliffordFrame, normal, sign: int) -> np.ndarray:
    """Unit spanning vector of the admissible boundary subspace.

    The condition B^{sign} psi = 0 confines psi to the (-sign) eigenspace
    of (n.c)G.  With the default frame that matrix is [[0, a], [conj(a), 0]]
    for a = -n2 - i n1, and the eigenvectors are (1, +-conj(a))/sqrt(2).
    """
    if sign not in (+1, -1):
        raise InputError("sign must be +1 or -1")
    nG = normal_chirality(frame, normal)
    a = nG[0, 1]
    e = np.array([1.0, -sign * np.conj(a)], dtype=complex) / np.sqrt(2)
    # consistency: e must be annihilated by the chosen projector
    B = 0.5 * (np.eye(2, dtype=complex) + sign * nG)
    if np.abs(B @ e).max() > 1e-12:
        raise AssertionError("constraint vector fails its defining projection")
    return e


def constraint_basis(mesh: TriMesh, sign: int, frame: CliffordFrame | None = None):
    """Sparse isometry P from admissible coefficients into ambient C^{2V}.

    Interior vertices keep both components; each boundary vertex
    contributes the single admissible direction for its outward normal.
    Columns are orthonormal, so P^H P = I and P^H psi is the pointwise
    orthogonal projection onto the constrained subspace.  Returns
    (P, cmap) where cmap[i] is the vertex owning constrained DOF i.
    """
    frame = frame or default_frame()
    normals = vertex_normals(mesh)
    V = mesh.num_vertices
    rows, cols, vals, cmap = [], [], [], []
    c = 0
    for v in range(V):
        if v in normals:
            e = boundary_subspace_vector(frame, normals[v], sign)
            rows += [2 * v, 2 * v + 1]
            cols += [c, c]
            vals += [e[0], e[1]]
            cmap.append(v)
            c += 1
        else:
            rows += [2 * v, 2 * v + 1]
            cols += [c, c + 1]
            vals += [1.0, 1.0]
            cmap += [v, v]
            c += 2
    P = sp.csr_matrix((vals, (rows, cols)), shape=(2 * V, c), dtype=complex)
    return P, np.array(cmap, dtype=int)


def flatten_spinor(psi) -> np.ndarray:
    """(V, 2) complex -> interleaved (2V,) ambient coordinates."""
    psi = np.asarray(psi, dtype=complex)
    return psi.reshape(-1)


def unflatten_spinor(flat) -> np.ndarray:
    flat = np.asarray(flat, dtype=complex)
    return flat.reshape(-1, 2)
