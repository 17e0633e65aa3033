"""The coupled functional E_rho(u, psi) = I(u) + J(u, psi) and its gradient.

The scalar part I comes from liouville.py.  The spinor part

    J(u, psi) = 2 [ int <D psi, psi> dv_g - rho int e^u |psi|^2 dv_g ]

is evaluated entirely through the spectral basis: with expansion
coefficients a (weighted-orthonormal basis), int <D psi, psi> equals
sum_j lambda_j |a_j|^2 exactly, and the e^u mass term uses the lumped
vertex measure.  Every identity used by the constraint machinery
(single-mode energy laws, orthogonality relations) is then exact for
the discrete operator, not merely approximated.

Sign conventions for gradients: for a perturbation (v, dpsi),

    d/dt E(u + t v, psi + t dpsi) |_{t=0}
        = partials.du . v + 2 Re <dpsi, partials.dpsi>

with plain Euclidean pairings (complex dot conjugating the first
argument).  Riesz representatives re-express the same covector in the
H^1 and weighted-spinor inner products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import InputError
from .fem import h1_norm
from .liouville import LiouvilleProblem, scalar_energy, scalar_residual
from .spectral import SpectralBasis, frac_half_norm


@dataclass(frozen=True)
class CoupledState:
    """Candidate solution (u, psi, rho); psi is a (V, 2) complex field."""

    u: np.ndarray
    psi: np.ndarray
    rho: float

    def __post_init__(self):
        if self.rho <= 0:
            raise InputError("rho must be positive")


@dataclass
class VariationalContext:
    """Bundles the background problem with its spectral basis.

    Also owns the lazily factorized H^1 Gram matrix used for Riesz
    representatives and descent preconditioning.
    """

    problem: LiouvilleProblem
    basis: SpectralBasis
    _gram_solve: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.basis.dirac.mesh is not self.problem.ops.mesh:
            raise InputError("basis and problem live on different meshes")
        if not self.basis.complete:
            raise InputError("searches need the complete spectral basis")

    @property
    def f(self) -> np.ndarray:
        return self.basis.f

    @property
    def ops(self):
        return self.problem.ops

    def gram_solve(self, rhs):
        if self._gram_solve is None:
            G = (self.ops.stiffness + self.ops.mass_g).tocsc()
            self._gram_solve = spla.splu(G)
        return self._gram_solve.solve(rhs)

    def constrained_coeffs(self, psi) -> np.ndarray:
        """Pointwise BC projection expressed in constrained coordinates."""
        flat = np.asarray(psi, dtype=complex).reshape(-1)
        return self.basis.dirac.P.conj().T @ flat

    def spectral_coeffs(self, psi_c) -> np.ndarray:
        return self.basis.vectors.conj().T @ (self.basis.Bd * psi_c)

    def from_spectral(self, a) -> np.ndarray:
        """Spectral coefficients -> constrained coordinates."""
        return self.basis.vectors @ np.asarray(a, dtype=complex)

    def ambient(self, psi_c) -> np.ndarray:
        flat = self.basis.dirac.P @ psi_c
        return flat.reshape(-1, 2)

    def mass_e_u(self, u) -> np.ndarray:
        """Per-constrained-DOF lumped weights of int e^u <.,.> dv_g."""
        D = self.basis.dirac
        return (D.mass_g_diag * np.exp(u))[D.cmap]

    def spinor_norm_sq_vertexwise(self, psi_c) -> np.ndarray:
        """|psi|^2 at each vertex from constrained coordinates."""
        D = self.basis.dirac
        out = np.zeros(D.mesh.num_vertices)
        np.add.at(out, D.cmap, np.abs(psi_c) ** 2)
        return out


@dataclass(frozen=True)
class EnergyBreakdown:
    total: float
    scalar: float
    spinor: float


@dataclass(frozen=True)
class EnergyPartials:
    du: np.ndarray       # real (V,)
    dpsi: np.ndarray     # complex (V, 2), lies in the BC subspace
    riesz_u: np.ndarray
    riesz_psi: np.ndarray


def energy_coeffs(ctx: VariationalContext, u, a, rho) -> EnergyBreakdown:
    """E_rho in (u, spectral coefficient) coordinates."""
    lam = ctx.basis.eigenvalues
    a = np.asarray(a, dtype=complex)
    psi_c = ctx.from_spectral(a)
    dirac_term = float(np.sum(lam * np.abs(a) ** 2))
    mass_term = float(ctx.mass_e_u(u) @ (np.abs(psi_c) ** 2))
    I_u = scalar_energy(ctx.ops, ctx.problem.h, ctx.problem.lam, u)
    J = 2 * (dirac_term - rho * mass_term)
    return EnergyBreakdown(total=I_u + J, scalar=I_u, spinor=J)


def energy(state: CoupledState, basis: SpectralBasis, problem: LiouvilleProblem) -> EnergyBreakdown:
    """E_rho of a state whose spinor is given as an ambient field."""
    ctx = VariationalContext(problem, basis)
    a = ctx.spectral_coeffs(ctx.constrained_coeffs(state.psi))
    return energy_coeffs(ctx, state.u, a, state.rho)


def energy_partials_coeffs(ctx: VariationalContext, u, a, rho):
    """Raw partial derivatives in (u, spectral coefficient) coordinates.

    Returns (du, da) with d/dt E(u + t v, a + t e) = du . v + 2 Re <e, da>.
    """
    lam = ctx.basis.eigenvalues
    a = np.asarray(a, dtype=complex)
    psi_c = ctx.from_spectral(a)
    m = ctx.mass_e_u(u)
    du = 2 * (
        scalar_residual(ctx.ops, ctx.problem.h, ctx.problem.lam, u)
        - rho * ctx.basis.dirac.mass_g_diag * np.exp(u) * ctx.spinor_norm_sq_vertexwise(psi_c)
    )
    da = 2 * (
        lam * a - rho * (ctx.basis.vectors.conj().T @ (m * psi_c))
    )
    return du, da


def grad_energy(state: CoupledState, basis: SpectralBasis, problem: LiouvilleProblem) -> EnergyPartials:
    """Cotangent of E_rho at a state, raw and as Riesz representatives."""
    ctx = VariationalContext(problem, basis)
    psi_c = ctx.constrained_coeffs(state.psi)
    a = ctx.spectral_coeffs(psi_c)
    du, da = energy_partials_coeffs(ctx, state.u, a, state.rho)
    dpsi_c = ctx.basis.vectors @ da  # back to constrained coordinates
    riesz_u = ctx.gram_solve(du)
    riesz_psi_c = dpsi_c / ctx.basis.Bd
    return EnergyPartials(
        du=du,
        dpsi=ctx.ambient(dpsi_c),
        riesz_u=riesz_u,
        riesz_psi=ctx.ambient(riesz_psi_c),
    )


def state_distance_sq(ctx: VariationalContext, state: CoupledState) -> float:
    """||u - f||_{H^1}^2 + ||psi||_{1/2}^2: squared distance from (f, 0)."""
    d = h1_norm(ctx.ops, state.u - ctx.f)
    half = frac_half_norm(ctx.basis, state.psi)
    return d * d + half
