"""Signed weighted spectra of the constrained spinor operator.

The eigenproblem D psi = lambda e^{f} psi (measure dv_g) is solved
through the elliptic squared pencil C x = mu B x, whose eigenvalues are
mu = lambda^2 and whose eigenvectors are B-orthonormal.  Signs are then
restored from the Hermitian first-order form A1:

* the spectrum carries an exact antiunitary symmetry (sigma_1 composed
  with conjugation anticommutes with the operator and preserves the
  boundary condition), so eigenvalues come in +-lambda pairs and the mu
  eigenvectors of a pair are mixed;
* consecutive sqrt(mu) values within a 5% relative gap are clustered,
  each cluster diagonalizes the small Ritz block of A1, the Ritz
  eigenvalues supply the signs and the rotated mu values the magnitudes;
* isolated modes take the sign of their A1 Rayleigh quotient directly.

Signs of highly oscillatory tail modes (lambda comparable to 1/h) may
come out flipped; every variational identity downstream is computed from
the reconstruction D = B X diag(lambda) X^H B and is therefore exact for
the discrete operator actually used.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dirac import DiracOperator, squared_pencil
from .errors import InputError, SolverError


@dataclass(frozen=True)
class SpectralBasis:
    """Weighted eigenpairs, B_f-orthonormal, sorted by signed value.

    eigenvalues  -- ascending (all negatives first); no zero expected
    vectors      -- (n_c, n) complex; column k pairs with eigenvalues[k]
    Bd           -- diagonal weighted mass on constrained DOF
    complete     -- whether every constrained mode is present
    kernel_dimension -- count of numerically zero eigenvalues
    """

    dirac: DiracOperator
    f: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    Bd: np.ndarray
    complete: bool
    kernel_dimension: int

    @property
    def num_positive(self) -> int:
        return int(np.sum(self.eigenvalues > 0))

    @property
    def num_negative(self) -> int:
        return int(np.sum(self.eigenvalues < 0))

    def index_of(self, j: int) -> int:
        """Signed index (j = 1 first positive, j = -1 first negative) to column."""
        if j == 0:
            raise InputError("signed eigenvalue indices exclude 0")
        nneg = self.num_negative
        if j > 0:
            col = nneg + (j - 1)
            if col >= len(self.eigenvalues):
                raise InputError(f"no eigenvalue with index {j}")
        else:
            col = nneg + j
            if col < 0:
                raise InputError(f"no eigenvalue with index {j}")
        return col

    def eigenvalue(self, j: int) -> float:
        return float(self.eigenvalues[self.index_of(j)])

    def eigenspinor_coeffs(self, j: int) -> np.ndarray:
        return self.vectors[:, self.index_of(j)]

    def eigenspinor(self, j: int) -> np.ndarray:
        """Ambient (V, 2) spinor field of mode j."""
        flat = self.dirac.P @ self.vectors[:, self.index_of(j)]
        return flat.reshape(-1, 2)

    def to_ambient(self, coeffs) -> np.ndarray:
        flat = self.dirac.P @ (self.vectors @ np.asarray(coeffs, dtype=complex))
        return flat.reshape(-1, 2)

    def coefficients_of(self, psi) -> np.ndarray:
        """Weighted expansion coefficients of a (V,2) field.

        The field is first projected pointwise onto the boundary-condition
        subspace; for admissible fields the expansion reconstructs them.
        """
        flat = np.asarray(psi, dtype=complex).reshape(-1)
        constrained = self.dirac.P.conj().T @ flat
        return self.vectors.conj().T @ (self.Bd * constrained)


def _signed_from_pencil(Cc, Bd, A1, cluster_rtol=0.05):
    """Signed eigenvalues and B-orthonormal vectors from (C, B) and A1."""
    s = 1.0 / np.sqrt(Bd)
    Ct = (Cc.multiply(s[None, :]).multiply(s[:, None])).toarray()
    Ct = 0.5 * (Ct + Ct.conj().T)
    mu, Y = np.linalg.eigh(Ct)
    mu = np.maximum(mu, 0.0)
    X = Y * s[:, None]
    del Y, Ct
    la = np.sqrt(mu)
    n = len(mu)
    lam = np.empty(n)
    i = 0
    while i < n:
        j = i + 1
        while j < n and (la[j] - la[j - 1]) <= cluster_rtol * max(la[j], 1e-8):
            j += 1
        blk = X[:, i:j]
        R = blk.conj().T @ (A1 @ blk)
        R = 0.5 * (R + R.conj().T)
        if j - i == 1:
            lam[i] = np.copysign(la[i], R[0, 0].real)
        else:
            ritz, U = np.linalg.eigh(R)
            mags = np.sqrt(np.einsum("kj,k->j", np.abs(U) ** 2, mu[i:j]))
            lam[i:j] = np.copysign(mags, ritz)
            X[:, i:j] = blk @ U
        i = j
    order = np.argsort(lam, kind="stable")
    return lam[order], X[:, order]


def _fix_phases(X: np.ndarray) -> None:
    """Deterministic column phases: largest-modulus entry made real positive."""
    idx = np.argmax(np.abs(X), axis=0)
    piv = X[idx, np.arange(X.shape[1])]
    piv = np.where(np.abs(piv) == 0, 1.0, piv)
    X *= (np.abs(piv) / piv)[None, :]


def solve_weighted_spectrum(D: DiracOperator, f, count="all") -> SpectralBasis:
    """Dense solve of the weighted eigenproblem under weight e^{f}.

    ``count='all'`` returns the complete constrained basis (required by
    the splitting and projection machinery); an integer keeps only that
    many modes nearest zero and marks the basis incomplete.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (D.mesh.num_vertices,):
        raise InputError("weight f has the wrong length")
    Cc, Bd = squared_pencil(D, f)
    lam, X = _signed_from_pencil(Cc, Bd, D.A1)
    if not np.all(np.isfinite(lam)):
        raise SolverError("eigensolver produced non-finite eigenvalues")
    _fix_phases(X)
    scale = max(np.abs(lam).max(), 1.0)
    kernel_dim = int(np.sum(np.abs(lam) <= 1e-10 * scale))
    complete = True
    if count != "all":
        k = int(count)
        keep = np.argsort(np.abs(lam), kind="stable")[:k]
        keep = np.sort(keep)
        lam, X = lam[keep], X[:, keep]
        complete = False
    return SpectralBasis(
        dirac=D,
        f=f,
        eigenvalues=lam,
        vectors=X,
        Bd=Bd,
        complete=complete,
        kernel_dimension=kernel_dim,
    )


def lowest_magnitudes(D: DiracOperator, f, k: int = 6) -> np.ndarray:
    """|lambda| of the k modes nearest zero, by sparse shift-invert.

    Works at sizes far beyond the dense solve and is the tool for
    refinement studies of the low spectrum.  Magnitudes come back sorted
    ascending; each one appears twice because of the +-lambda symmetry,
    so the smallest positive eigenvalue is ``lowest_magnitudes(D, f)[0]``.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (D.mesh.num_vertices,):
        raise InputError("weight f has the wrong length")
    Cc, Bd = squared_pencil(D, f)
    k = min(int(k), Cc.shape[0] - 2)
    mu = spla.eigsh(Cc.tocsc(), k=k, M=sp.diags(Bd).tocsc(), sigma=0.0,
                    which="LM", return_eigenvectors=False)
    mu = np.sort(np.maximum(np.real(mu), 0.0))
    return np.sqrt(mu)


def _require_complete(basis: SpectralBasis) -> None:
    if not basis.complete:
        raise InputError("operation requires the complete spectral basis")


def split(basis: SpectralBasis, psi):
    """Decompose a (V,2) field into positive and negative weighted parts."""
    _require_complete(basis)
    a = basis.coefficients_of(psi)
    neg = basis.num_negative
    a_minus = np.concatenate([a[:neg], np.zeros(len(a) - neg, dtype=complex)])
    a_plus = np.concatenate([np.zeros(neg, dtype=complex), a[neg:]])
    return basis.to_ambient(a_plus), basis.to_ambient(a_minus)


def frac_half_norm(basis: SpectralBasis, psi) -> float:
    """Sum of |lambda_j| |a_j|^2: the square of the spectral half-norm."""
    _require_complete(basis)
    a = basis.coefficients_of(psi)
    return float(np.sum(np.abs(basis.eigenvalues) * np.abs(a) ** 2))


def weighted_norm_sq(basis: SpectralBasis, psi) -> float:
    """int e^{f} |psi|^2 dv_g for an admissible field."""
    a = basis.coefficients_of(psi)
    return float(np.sum(np.abs(a) ** 2))


def spectrum_csv(basis: SpectralBasis, path) -> None:
    """Persist `j,lambda` rows with signed indices."""
    with open(path, "w") as fh:
        fh.write("j,lambda\n")
        for j in range(-basis.num_negative, basis.num_positive + 1):
            if j == 0:
                continue
            fh.write(f"{j},{basis.eigenvalue(j)!r}\n")


def _sha(arr) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def save_basis(basis: SpectralBasis, path_prefix) -> None:
    """Binary block dump plus a JSON descriptor for compatibility checks."""
    np.savez(
        f"{path_prefix}.npz",
        eigenvalues=basis.eigenvalues,
        vectors=basis.vectors,
        Bd=basis.Bd,
        f=basis.f,
    )
    desc = {
        "mesh_hash": _sha(basis.dirac.mesh.vertices) + ":" + _sha(basis.dirac.mesh.triangles),
        "weight_hash": _sha(basis.f),
        "sign": basis.dirac.sign,
        "complete": basis.complete,
        "kernel_dimension": basis.kernel_dimension,
        "num_modes": int(len(basis.eigenvalues)),
    }
    with open(f"{path_prefix}.json", "w") as fh:
        json.dump(desc, fh, indent=2)


def load_basis(D: DiracOperator, path_prefix) -> SpectralBasis:
    with open(f"{path_prefix}.json") as fh:
        desc = json.load(fh)
    mesh_hash = _sha(D.mesh.vertices) + ":" + _sha(D.mesh.triangles)
    if desc["mesh_hash"] != mesh_hash:
        raise InputError("stored basis belongs to a different mesh")
    data = np.load(f"{path_prefix}.npz")
    f = data["f"]
    if desc["weight_hash"] != _sha(f):
        raise InputError("stored basis fails its weight hash")
    return SpectralBasis(
        dirac=D,
        f=f,
        eigenvalues=data["eigenvalues"],
        vectors=data["vectors"],
        Bd=data["Bd"],
        complete=bool(desc["complete"]),
        kernel_dimension=int(desc["kernel_dimension"]),
    )
