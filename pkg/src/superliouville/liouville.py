"""Scalar curvature-prescription solves.

Two closely related convex problems live here:

* ``normalize_metric``: find the log factor xi whose metric
  e^{2 xi} (dx^2 + dy^2) has Gaussian curvature -1 and geodesic boundary
  curvature 0.  Discretely: (S xi)_v + A_v e^{2 xi_v} + theta_v = 0,
  with theta_v the boundary turning angle (zero at interior vertices).
* ``solve_liouville``: in a fixed background metric, minimize

      I(u) = int |grad u|^2 - h e^{2u} - 2u dv_g - 2 int_bdry lam e^u ds_g

  whose Euler-Lagrange equation is -Lap u = h e^{2u} + 1 with Robin data
  du/dn = lam e^u.  For h <= 0, lam <= 0, not both zero, I is strictly
  convex, so damped Newton from any start finds the unique minimizer.

Both solvers share one damped-Newton loop with Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .curvature import turning_angles
from .errors import InputError, SolverError
from .fem import FemOperators, assemble_operators
from .mesh import TriMesh


@dataclass(frozen=True)
class LiouvilleProblem:
    """Curvature data for the scalar solve on an assembled metric.

    h    -- per-vertex coefficient of e^{2u}, everywhere <= 0
    lam  -- per-vertex boundary coefficient of e^{u}, <= 0 on the
            boundary (interior entries ignored)
    normalized -- whether ops.phi is a normalized background factor
    """

    ops: FemOperators
    h: np.ndarray
    lam: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        V = self.ops.mesh.num_vertices
        h = np.asarray(self.h, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        if h.shape != (V,) or lam.shape != (V,):
            raise InputError("h and lam must be per-vertex fields")
        if np.any(h > 0):
            raise InputError("h must be nonpositive everywhere")
        bidx = self.ops.mesh.boundary_vertices()
        if np.any(lam[bidx] > 0):
            raise InputError("lam must be nonpositive on the boundary")
        if np.all(h == 0) and np.all(lam[bidx] == 0):
            raise InputError("h and lam cannot both vanish identically")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class LiouvilleSolution:
    f: np.ndarray
    residual_norm: float
    iterations: int
    energy: float
    hessian_pd: bool
    c0: float  # min over vertices of |h| e^{2f}, the uniform positivity margin


def _boundary_weights(ops: FemOperators) -> np.ndarray:
    """Lumped ds_g weights scattered to a full-length vertex array."""
    w = np.zeros(ops.mesh.num_vertices)
    for idx, weights in ops.boundary_lumped_g:
        w[idx] += weights
    return w


def scalar_energy(ops: FemOperators, h, lam, u) -> float:
    """I(u) with lumped nonlinear terms."""
    u = np.asarray(u, dtype=float)
    bw = _boundary_weights(ops)
    quad = float(u @ (ops.stiffness @ u))
    interior = float(np.sum(ops.lumped_g * (h * np.exp(2 * u) + 2 * u)))
    boundary = float(np.sum(bw * lam * np.exp(u)))
    return quad - interior - 2 * boundary


def scalar_residual(ops: FemOperators, h, lam, u) -> np.ndarray:
    """R(u) with grad I = 2 R; zero exactly at the discrete solution."""
    u = np.asarray(u, dtype=float)
    bw = _boundary_weights(ops)
    return (
        ops.stiffness @ u
        - ops.lumped_g * (h * np.exp(2 * u) + 1.0)
        - bw * lam * np.exp(u)
    )


def scalar_hessian(ops: FemOperators, h, lam, u) -> sp.csr_matrix:
    """Jacobian of R: S plus nonnegative diagonal (h, lam <= 0)."""
    u = np.asarray(u, dtype=float)
    bw = _boundary_weights(ops)
    diag = ops.lumped_g * (-2 * h) * np.exp(2 * u) + bw * (-lam) * np.exp(u)
    return (ops.stiffness + sp.diags(diag)).tocsr()


def _damped_newton(u0, energy, residual, hessian, tol, max_iters, context):
    u = np.asarray(u0, dtype=float).copy()
    E = energy(u)
    for it in range(1, max_iters + 1):
        R = residual(u)
        rnorm = float(np.abs(R).max())
        if rnorm <= tol:
            return u, rnorm, it - 1
        H = hessian(u)
        delta = spla.spsolve(H.tocsc(), -R)
        slope = 2 * float(R @ delta)  # directional derivative of the energy
        t = 1.0
        while True:
            E_new = energy(u + t * delta)
            if E_new <= E + 1e-4 * t * slope:
                break
            t *= 0.5
            if t < 1e-14:
                raise SolverError(f"{context}: line search failed at iteration {it}")
        u = u + t * delta
        E = E_new
    R = residual(u)
    rnorm = float(np.abs(R).max())
    if rnorm <= tol:
        return u, rnorm, max_iters
    raise SolverError(
        f"{context}: no convergence in {max_iters} iterations (residual {rnorm:.3e})"
    )


def _mean_field_constant(ops: FemOperators, h, lam) -> float:
    """Constant minimizing I over constant fields, in closed form.

    dI/dc = 0 reads P e^{2c} + Q e^c - |M|_g = 0 with P = -int h dv_g
    and Q = -int_bdry lam ds_g, both >= 0 and not both zero.
    """
    bw = _boundary_weights(ops)
    P = float(np.sum(ops.lumped_g * (-h)))
    Q = float(np.sum(bw * (-lam)))
    area = float(ops.lumped_g.sum())
    if P > 0:
        ec = (-Q + np.sqrt(Q * Q + 4 * P * area)) / (2 * P)
    else:
        ec = area / Q
    return float(np.log(ec))


def solve_liouville(problem: LiouvilleProblem, init=None, tol=1e-10, max_iters=60) -> LiouvilleSolution:
    """Unique minimizer of I by damped Newton with Armijo backtracking.

    ``init=None`` starts from the best constant field (closed form);
    any per-vertex array is accepted as a start and, by convexity,
    reaches the same minimizer.
    """
    ops, h, lam = problem.ops, problem.h, problem.lam
    if init is None:
        u0 = np.full(ops.mesh.num_vertices, _mean_field_constant(ops, h, lam))
    else:
        u0 = np.asarray(init, dtype=float)
        if u0.shape != (ops.mesh.num_vertices,):
            raise InputError("init has the wrong length")
    f, rnorm, iters = _damped_newton(
        u0,
        energy=lambda u: scalar_energy(ops, h, lam, u),
        residual=lambda u: scalar_residual(ops, h, lam, u),
        hessian=lambda u: scalar_hessian(ops, h, lam, u),
        tol=tol,
        max_iters=max_iters,
        context="liouville",
    )
    H = scalar_hessian(ops, h, lam, f)
    # S is positive semidefinite with constant kernel on a connected mesh
    # and the added diagonal is nonnegative, so positive-definiteness
    # reduces to that diagonal not vanishing identically.
    diag_extra = H.diagonal() - ops.stiffness.diagonal()
    hess_pd = bool(diag_extra.max() > 0)
    c0 = float(np.min(np.abs(h) * np.exp(2 * f)))
    return LiouvilleSolution(
        f=f,
        residual_norm=rnorm,
        iterations=iters,
        energy=scalar_energy(ops, h, lam, f),
        hessian_pd=hess_pd,
        c0=c0,
    )


def weak_residual(problem: LiouvilleProblem, u) -> float:
    """Dual H^1 norm of the weak equation residual at u.

    sup over test fields v of R(u).v / ||v||_{H^1}, evaluated exactly as
    sqrt(R^T G^{-1} R) with G = S + M_g the discrete H^1 Gram matrix.
    """
    ops = problem.ops
    R = scalar_residual(ops, problem.h, problem.lam, u)
    G = (ops.stiffness + ops.mass_g).tocsc()
    z = spla.spsolve(G, R)
    return float(np.sqrt(max(R @ z, 0.0)))


def normalize_metric(mesh: TriMesh, phi0, tol=1e-10, max_iters=60) -> np.ndarray:
    """Total log factor xi with curvature -1 in the interior, 0 on the boundary.

    The discrete equation (S xi)_v + A_v e^{2 xi_v} + theta_v = 0 pins
    the lumped interior curvature to exactly -1 and gives the metric
    total area -2*pi*chi in the lumped measure.  The answer does not
    depend on phi0, which only seeds the Newton iteration; the returned
    array is the full factor (background plus correction).
    """
    phi0 = np.asarray(phi0, dtype=float)
    if phi0.shape != (mesh.num_vertices,):
        raise InputError("phi0 has the wrong length")
    ops_flat = assemble_operators(mesh, np.zeros(mesh.num_vertices))
    S = ops_flat.stiffness
    A = ops_flat.lumped_flat
    theta = np.zeros(mesh.num_vertices)
    for loop, ang in zip(mesh.boundary_loops, turning_angles(mesh)):
        theta[loop] += ang

    def energy(x):
        return float(0.5 * x @ (S @ x) + 0.5 * np.sum(A * np.exp(2 * x)) + theta @ x)

    def residual(x):
        return 0.5 * (S @ x + A * np.exp(2 * x) + theta)

    def hessian(x):
        return 0.5 * (S + sp.diags(2 * A * np.exp(2 * x))).tocsr()

    xi, _, _ = _damped_newton(
        phi0, energy, residual, hessian, tol=tol, max_iters=max_iters,
        context="normalize_metric",
    )
    return xi
