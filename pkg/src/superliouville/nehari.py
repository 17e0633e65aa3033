"""Generalized Nehari constraint: kill the negative-mode components of
the spinor Euler-Lagrange residual.

With the weighted eigenbasis {phi_j} and expansion psi = sum a_j phi_j,
the constraint functionals are

    G_j(u, psi) = int <D psi - rho e^u psi, phi_j> dv_g
               = [Lambda a - rho W(u) a]_j             for j < 0,

where W(u) = X^H M_u X is the e^u-weighted Gram matrix of the basis
(identity at u = f).  Given u and the nonnegative-mode part a+, the
negative-mode part solving G_j = 0 exists uniquely because the block
Lambda_- - rho W_-- is negative definite for every rho > 0; the system
is solved either densely (small negative blocks) or by conjugate
gradients with operator products, never forming W in full.

Multiplier fitting works in real coordinates (u, Re a, Im a) and treats
Re G_j and Im G_j as separate constraints.  The constraint-gradient
matrix is never materialized: its products reduce to a handful of
basis-matrix gemvs, and the least-squares fit runs through LSMR.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .energy import CoupledState, VariationalContext, energy_partials_coeffs
from .errors import InputError, SolverError
from .liouville import LiouvilleProblem
from .spectral import SpectralBasis

_DENSE_NEG_LIMIT = 700


@dataclass(frozen=True)
class NehariResidual:
    values: np.ndarray   # complex, one entry per negative mode
    sup_norm: float


def constraint_values(ctx: VariationalContext, u, a, rho) -> np.ndarray:
    """All components [Lambda a - rho W(u) a]_j, negative modes first."""
    lam = ctx.basis.eigenvalues
    a = np.asarray(a, dtype=complex)
    psi_c = ctx.from_spectral(a)
    return lam * a - rho * (ctx.basis.vectors.conj().T @ (ctx.mass_e_u(u) * psi_c))


def nehari_residual(state: CoupledState, basis: SpectralBasis, problem: LiouvilleProblem) -> NehariResidual:
    ctx = VariationalContext(problem, basis)
    a = ctx.spectral_coeffs(ctx.constrained_coeffs(state.psi))
    G = constraint_values(ctx, state.u, a, state.rho)[: basis.num_negative]
    sup = float(np.max(np.abs(G))) if len(G) else 0.0
    return NehariResidual(values=G, sup_norm=sup)


def project_to_nehari_coeffs(ctx: VariationalContext, u, a_plus, rho,
                             tol: float = 1e-12) -> np.ndarray:
    """Complete nonnegative-mode coefficients a+ to the full manifold point.

    `a_plus` holds the coefficients of modes j > 0 (length num_positive).
    Returns the full spectral coefficient vector [b; a+].
    """
    basis = ctx.basis
    neg = basis.num_negative
    npos = basis.num_positive
    a_plus = np.asarray(a_plus, dtype=complex)
    if a_plus.shape != (npos,):
        raise InputError(
            f"expected {npos} nonnegative-mode coefficients, got {a_plus.shape}"
        )
    if rho <= 0:
        raise InputError("rho must be positive")
    if neg == 0:
        return a_plus.copy()

    lam_neg = basis.eigenvalues[:neg]
    X = basis.vectors
    Xn = X[:, :neg]
    m = ctx.mass_e_u(u)

    # right-hand side: rho * W_-+ a+
    psi_plus_c = X[:, neg:] @ a_plus
    rhs = rho * (Xn.conj().T @ (m * psi_plus_c))

    if neg <= _DENSE_NEG_LIMIT:
        Wmm = Xn.conj().T @ (m[:, None] * Xn)
        A = np.diag(lam_neg.astype(complex)) - rho * Wmm
        b = np.linalg.solve(A, rhs)
        return np.concatenate([b, a_plus])

    # CG on the positive-definite system (-Lambda_- + rho W_--) b = -rhs.
    def matvec(b):
        w = Xn.conj().T @ (m * (Xn @ b))
        return -lam_neg * b + rho * w

    op = spla.LinearOperator((neg, neg), matvec=matvec, dtype=complex)
    w_diag = np.einsum("c,cj->j", m, np.abs(Xn) ** 2)
    inv_diag = 1.0 / (-lam_neg + rho * w_diag)
    precond = spla.LinearOperator(
        (neg, neg), matvec=lambda b: inv_diag * b, dtype=complex
    )
    b, info = spla.cg(op, -rhs, rtol=tol, atol=0.0, maxiter=500, M=precond)
    if info != 0:
        raise SolverError(f"negative-mode completion did not converge (cg info={info})")
    return np.concatenate([b, a_plus])


def project_to_nehari(u, psi_plus, basis: SpectralBasis, rho,
                      problem: LiouvilleProblem) -> np.ndarray:
    """Ambient-field version: returns the completed (V, 2) spinor."""
    ctx = VariationalContext(problem, basis)
    a = ctx.spectral_coeffs(ctx.constrained_coeffs(psi_plus))
    neg = basis.num_negative
    stray = float(np.max(np.abs(a[:neg]))) if neg else 0.0
    if stray > 1e-8 * max(1.0, float(np.max(np.abs(a)))):
        raise InputError("psi_plus has negative-mode content; split it first")
    full = project_to_nehari_coeffs(ctx, u, a[neg:], rho)
    return ctx.ambient(ctx.from_spectral(full))


def fit_multipliers(grad_components, constraint_grads) -> np.ndarray:
    """Least-squares multipliers: minimize |g - sum_k mu_k c_k|_2.

    `grad_components`: real vector of length n (the full differential of the
    energy in some real coordinates).  `constraint_grads`: either an (n, K)
    array or a LinearOperator with matvec/rmatvec, whose columns are the
    differentials of the constraint functionals in the same coordinates.
    Returns the length-K real multiplier vector.
    """
    g = np.asarray(grad_components, dtype=float)
    if isinstance(constraint_grads, spla.LinearOperator):
        if constraint_grads.shape[0] != g.shape[0]:
            raise InputError("constraint gradient operator shape mismatch")
        res = spla.lsmr(constraint_grads, g, atol=1e-12, btol=1e-12, maxiter=2000)
        return res[0]
    C = np.asarray(constraint_grads, dtype=float)
    if C.ndim != 2 or C.shape[0] != g.shape[0]:
        raise InputError("constraint gradient matrix shape mismatch")
    if C.shape[1] == 0:
        return np.zeros(0)
    mu, *_ = np.linalg.lstsq(C, g, rcond=None)
    return mu


def _constraint_gradient_operator(ctx: VariationalContext, u, psi_c, rho):
    """Real (V + 2n, 2*neg) operator of all d(Re G_j), d(Im G_j) columns.

    Complexified action: a real multiplier pair (mu_re, mu_im) for mode j is
    the complex scalar nu_j, and C @ mu is the real differential of
    Re(nu^H G).  The adjoint packs z_j = pair_j . r_u + Q_j . c back into
    (Re z, Im z) pairs.
    """
    basis = ctx.basis
    neg = basis.num_negative
    n_all = len(basis.eigenvalues)
    V = ctx.ops.mesh.num_vertices
    X = basis.vectors
    Xn = X[:, :neg]
    lam = basis.eigenvalues
    m = ctx.mass_e_u(u)
    cmap = basis.dirac.cmap

    def scatter(vals):
        out = np.zeros(V, dtype=complex)
        np.add.at(out, cmap, vals)
        return out

    def matvec(mu):
        nu = mu[0::2] + 1j * mu[1::2]
        # u-part of d(Re nu^H G): Re(sum_j conj(nu_j) dG_j/du)
        du = -rho * np.real(scatter(np.conj(Xn @ nu) * psi_c * m))
        # a-part: q = Q_neg^H nu
        q = -rho * (X.conj().T @ (m * (Xn @ nu)))
        q[:neg] += lam[:neg] * nu
        return np.concatenate([du, q.real, q.imag])

    def rmatvec(r):
        r_u = r[:V]
        c = r[V:V + n_all] + 1j * r[V + n_all:]
        z = -rho * (Xn.conj().T @ (m * psi_c * r_u[cmap]))
        z += lam[:neg] * c[:neg] - rho * (Xn.conj().T @ (m * (X @ c)))
        out = np.empty(2 * neg)
        out[0::2] = z.real
        out[1::2] = z.imag
        return out

    return spla.LinearOperator((V + 2 * n_all, 2 * neg),
                               matvec=matvec, rmatvec=rmatvec, dtype=float)


def multipliers(state: CoupledState, basis: SpectralBasis, problem: LiouvilleProblem) -> np.ndarray:
    """Lagrange multipliers of E restricted to the constraint set.

    The real and imaginary parts of each G_j (j < 0) act as separate real
    constraints; the returned vector interleaves their multipliers as
    [Re mu_1, Im mu_1, Re mu_2, ...].  At genuine constrained critical
    points the fit comes out at the noise floor, which is the quantity
    the diagnostics monitor.
    """
    ctx = VariationalContext(problem, basis)
    neg = basis.num_negative
    if neg == 0:
        return np.zeros(0)
    psi_c = ctx.constrained_coeffs(state.psi)
    a = ctx.spectral_coeffs(psi_c)
    du, da = energy_partials_coeffs(ctx, state.u, a, state.rho)
    g = np.concatenate([du, 2 * da.real, 2 * da.imag])
    C = _constraint_gradient_operator(ctx, state.u, ctx.from_spectral(a), state.rho)
    return fit_multipliers(g, C)
