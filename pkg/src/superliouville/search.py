"""Saddle-point searches on the constrained energy landscape.

Two branches are implemented.

Mountain pass (0 < rho < lambda_1): the restriction of E to the
two-parameter family (f + t, s phi_1) stays on the constraint set
exactly, because constant shifts of u scale the weighted Gram matrix
uniformly.  Phase A locates the exact saddle of that closed-form slice
and builds a discretized path through it whose endpoints sit strictly
below E(f, 0).  Phase B deforms the path maximum by preconditioned
constrained descent (the chain-rule term through the negative-mode
completion vanishes on the constraint set, so the reduced gradient is
just the restricted partial gradient).  Phase C certifies the
candidate with a Newton solve of the full Euler-Lagrange system.

Linking (lambda_k < rho < lambda_{k+1}): explicit constants (T, A, R)
are fixed so that the energy on the boundary of the linking cylinder
lies below I(f) with a unit margin, by direct evaluation rather than
estimate; the cylinder and the dual sphere-minus-cone set then supply
seed states for the same Newton certification.

The Newton solver works in real coordinates (u, Re a, Im a) with a
bordered row freezing the global U(1) phase, solves its steps by GMRES
with a block preconditioner (sparse factorization for the scalar
block, spectral diagonal for the spinor block), and reports residual
history; the Jacobian is applied matrix-free through basis gemvs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .energy import (
    CoupledState,
    EnergyBreakdown,
    VariationalContext,
    energy_coeffs,
    energy_partials_coeffs,
)
from .errors import InputError, ResonanceError, SolverError
from .fem import boundary_integrate_g, h1_norm, integrate_g
from .liouville import LiouvilleProblem, scalar_energy, scalar_hessian, scalar_residual
from .nehari import constraint_values, multipliers, project_to_nehari_coeffs
from .spectral import SpectralBasis

RESONANCE_GAP = 1e-6


# ---------------------------------------------------------------------------
# diagnostics containers


@dataclass
class PSDiagnostics:
    """Per-iteration records of a minimax run; data only, no judgments."""

    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    energies: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grad_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))
    multiplier_sups: np.ndarray = field(default_factory=lambda: np.zeros(0))
    state_norms: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def summary(self) -> dict:
        out = {"iterations": int(len(self.iterations))}
        if len(self.energies):
            out["energy_first"] = float(self.energies[0])
            out["energy_last"] = float(self.energies[-1])
            out["grad_norm_last"] = float(self.grad_norms[-1])
            out["state_norm_last"] = float(self.state_norms[-1])
            finite = self.multiplier_sups[np.isfinite(self.multiplier_sups)]
            if len(finite):
                out["multiplier_sup_last"] = float(finite[-1])
        return out


def ps_diagnostics(records) -> PSDiagnostics:
    """Assemble a diagnostics object from a list of per-iteration dicts."""
    if not records:
        return PSDiagnostics()
    return PSDiagnostics(
        iterations=np.array([r["iteration"] for r in records], dtype=int),
        energies=np.array([r["energy"] for r in records]),
        grad_norms=np.array([r["grad_norm"] for r in records]),
        multiplier_sups=np.array(
            [r.get("multiplier_sup", np.nan) for r in records]
        ),
        state_norms=np.array([r["state_norm"] for r in records]),
    )


@dataclass
class SearchResult:
    state: CoupledState
    energy: EnergyBreakdown
    el_residual: float
    nehari_sup: float
    converged: bool
    iterations: int
    diagnostics: PSDiagnostics
    info: dict


# ---------------------------------------------------------------------------
# Euler-Lagrange residual


def el_residual_parts(ctx: VariationalContext, u, a, rho):
    """(F_u, F_a): half the gradient of E in the natural pairings."""
    D = ctx.basis.dirac
    psi_c = ctx.from_spectral(a)
    F_u = (
        scalar_residual(ctx.ops, ctx.problem.h, ctx.problem.lam, u)
        - rho * D.mass_g_diag * np.exp(u) * ctx.spinor_norm_sq_vertexwise(psi_c)
    )
    F_a = constraint_values(ctx, u, a, rho)
    return F_u, F_a


def el_residual_norm(ctx: VariationalContext, u, a, rho) -> float:
    """Pointwise-strength residual: scalar part is divided by the lumped
    measure (turning the weak residual into a strong one), spinor part is
    already expressed against unit-norm modes."""
    F_u, F_a = el_residual_parts(ctx, u, a, rho)
    scal = float(np.max(np.abs(F_u) / ctx.ops.lumped_g))
    spin = float(np.max(np.abs(F_a))) if len(F_a) else 0.0
    return max(scal, spin)


def _background_moments(ctx: VariationalContext):
    """H = int(-h) e^{2f} dv_g, L = int_bdy(-lam) e^f dsigma_g.

    Criticality of the background makes H + L equal the area, which the
    slice formulas below rely on.
    """
    f = ctx.f
    H = integrate_g(ctx.ops, -ctx.problem.h * np.exp(2 * f))
    ef = np.exp(f)
    L = 0.0
    for loop_id in range(ctx.ops.mesh.num_loops):
        L += boundary_integrate_g(ctx.ops, -ctx.problem.lam * ef, loop_id)
    return H, L


def check_nonresonant(basis: SpectralBasis, rho: float) -> None:
    lam = basis.eigenvalues
    scale = max(1.0, float(np.max(np.abs(lam))) if len(lam) else 1.0)
    gap = np.min(np.abs(lam - rho)) if len(lam) else np.inf
    if gap <= RESONANCE_GAP * scale:
        nearest = float(lam[np.argmin(np.abs(lam - rho))])
        raise ResonanceError(
            f"rho={rho!r} is within {RESONANCE_GAP:g} (relative) of the "
            f"eigenvalue {nearest!r}",
            nearest_eigenvalue=nearest,
        )


# ---------------------------------------------------------------------------
# Newton certification


def _spectral_mass_diag(ctx: VariationalContext, u) -> np.ndarray:
    """Exact diagonal of W(u) = X^H M_u X."""
    m = ctx.mass_e_u(u)
    return np.einsum("c,cj->j", m, np.abs(ctx.basis.vectors) ** 2)


def newton_refine(state: CoupledState, basis: SpectralBasis, problem: LiouvilleProblem,
                  tol: float = 1e-10, max_iters: int = 40):
    """Solve the coupled Euler-Lagrange system from a seed state.

    Returns (refined CoupledState, report dict).  The report carries the
    residual history, the GMRES iteration counts, whether the U(1) phase
    was frozen, and the distance the state moved.  Near-singular spinor
    Jacobians on the trivial branch are reported as ResonanceError with
    the offending eigenvalue.
    """
    ctx = VariationalContext(problem, basis)
    rho = state.rho
    lam = basis.eigenvalues
    n = len(lam)
    V = ctx.ops.mesh.num_vertices
    X = basis.vectors
    cmap = basis.dirac.cmap
    gauge_tol = 1e-8

    u = np.array(state.u, dtype=float)
    a = ctx.spectral_coeffs(ctx.constrained_coeffs(state.psi))
    u0, a0 = u.copy(), a.copy()

    def scatter_abs2(vals):
        out = np.zeros(V)
        np.add.at(out, cmap, vals)
        return out

    history = []
    gmres_counts = []
    gauge_used = False
    converged = False
    res = el_residual_norm(ctx, u, a, rho)
    scale = max(1.0, float(np.max(np.abs(lam))))

    for it in range(max_iters):
        history.append(res)
        if res <= tol:
            converged = True
            break

        F_u, F_a = el_residual_parts(ctx, u, a, rho)
        m = ctx.mass_e_u(u)
        w_v = basis.dirac.mass_g_diag * np.exp(u)
        psi_c = ctx.from_spectral(a)
        psi_sq_v = ctx.spinor_norm_sq_vertexwise(psi_c)
        H_s = scalar_hessian(ctx.ops, ctx.problem.h, ctx.problem.lam, u)

        wdiag = _spectral_mass_diag(ctx, u)
        a_norm = float(np.linalg.norm(a))
        dmin_idx = int(np.argmin(np.abs(lam - rho * wdiag)))
        dmin = abs(lam[dmin_idx] - rho * wdiag[dmin_idx])
        if a_norm < 1e-6 and dmin < 1e-8 * scale:
            raise ResonanceError(
                "spinor Jacobian is singular on the trivial branch: "
                f"rho*<e^u> matches eigenvalue {lam[dmin_idx]!r}",
                nearest_eigenvalue=float(lam[dmin_idx]),
            )

        use_gauge = a_norm > gauge_tol
        gauge_used = gauge_used or use_gauge
        dim = V + 2 * n + (1 if use_gauge else 0)

        def unpack(x):
            du = x[:V]
            da = x[V:V + n] + 1j * x[V + n:V + 2 * n]
            return du, da

        def jmat(x):
            du, da = unpack(x)
            dpsi_c = X @ da
            # scalar row: H_s du - rho d(w |psi|^2)
            r_u = H_s @ du
            r_u -= rho * w_v * psi_sq_v * du
            r_u -= rho * w_v * 2 * scatter_abs2(np.real(np.conj(psi_c) * dpsi_c))
            # spinor row: (Lambda - rho W) da - rho X^H(m psi du)
            r_a = lam * da - rho * (X.conj().T @ (m * dpsi_c))
            r_a -= rho * (X.conj().T @ (m * psi_c * du[cmap]))
            out = np.empty(dim)
            out[:V] = r_u
            out[V:V + n] = r_a.real
            out[V + n:V + 2 * n] = r_a.imag
            if use_gauge:
                # bordered U(1) row/column: direction i*a in real coords
                zr, zi = -a.imag, a.real
                t = x[-1]
                out[V:V + n] += t * zr
                out[V + n:V + 2 * n] += t * zi
                out[-1] = zr @ x[V:V + n] + zi @ x[V + n:V + 2 * n]
            return out

        lu = spla.splu(H_s.tocsc())
        d_spin = lam - rho * wdiag
        floor = 0.05 * max(scale, 1.0)
        d_spin = np.where(np.abs(d_spin) < floor,
                          np.copysign(floor, np.where(d_spin == 0, 1.0, d_spin)),
                          d_spin)

        def pmat(x):
            out = np.empty(dim)
            out[:V] = lu.solve(x[:V])
            da = (x[V:V + n] + 1j * x[V + n:V + 2 * n]) / d_spin
            out[V:V + n] = da.real
            out[V + n:V + 2 * n] = da.imag
            if use_gauge:
                out[-1] = x[-1]
            return out

        rhs = np.zeros(dim)
        rhs[:V] = -F_u
        rhs[V:V + n] = -F_a.real
        rhs[V + n:V + 2 * n] = -F_a.imag

        J = spla.LinearOperator((dim, dim), matvec=jmat, dtype=float)
        M = spla.LinearOperator((dim, dim), matvec=pmat, dtype=float)
        inner_rtol = min(0.1, max(1e-10, 0.01 * res / max(history[0], tol)))
        counter = {"n": 0}

        def cb(_):
            counter["n"] += 1

        sol, info = spla.gmres(J, rhs, rtol=inner_rtol, atol=0.0, restart=80,
                               maxiter=6, M=M, callback=cb,
                               callback_type="pr_norm")
        gmres_counts.append(counter["n"])
        if info != 0 and np.linalg.norm(sol) == 0.0:
            raise SolverError("Newton step linear solve failed")

        du, da = unpack(sol)
        # backtracking on the residual norm; overlong trial steps may
        # overflow the exponentials and come back as rejected infinities
        step = 1.0
        base = res
        with np.errstate(over="ignore", invalid="ignore"):
            while step > 1e-12:
                u_t = u + step * du
                a_t = a + step * da
                res_t = el_residual_norm(ctx, u_t, a_t, rho)
                if np.isfinite(res_t) and res_t <= (1 - 1e-4 * step) * base:
                    u, a, res = u_t, a_t, res_t
                    break
                step *= 0.5
            else:
                break  # stalled; report non-convergence

    else:
        res = el_residual_norm(ctx, u, a, rho)
        if res <= tol:
            history.append(res)
            converged = True

    if converged and len(history) and history[-1] != res:
        history.append(res)

    psi = ctx.ambient(ctx.from_spectral(a))
    refined = CoupledState(u=u, psi=psi, rho=rho)
    moved = float(np.sqrt(h1_norm(ctx.ops, u - u0) ** 2 + np.sum(np.abs(a - a0) ** 2)))
    report = {
        "converged": bool(converged),
        "iterations": len(history) - 1,
        "residual": float(res),
        "residual_history": [float(r) for r in history],
        "gmres_iterations": gmres_counts,
        "gauge_fixed": bool(gauge_used),
        "moved": moved,
        "psi_norm": float(np.linalg.norm(a)),
    }
    return refined, report


# ---------------------------------------------------------------------------
# constrained descent used by the path deformation


def _reduced_gradient(ctx: VariationalContext, u, a, rho):
    """Partial gradient in (u, a+); exact reduced gradient on the manifold."""
    du, da = energy_partials_coeffs(ctx, u, a, rho)
    neg = ctx.basis.num_negative
    return du, da[neg:]


def _descent_step(ctx: VariationalContext, u, a, rho, max_backtracks=25,
                  trust: float = 0.0):
    """One preconditioned descent step staying on the constraint set.

    Returns (u', a', E', grad_norm, step_taken).  A positive ``trust``
    caps the displacement (H^1 x l^2 norm) of the first trial step, which
    keeps path nodes from plunging off a ridge in a single move.
    """
    neg = ctx.basis.num_negative
    du, dap = _reduced_gradient(ctx, u, a, rho)
    pu = ctx.gram_solve(du)
    grad_norm = float(np.sqrt(du @ pu + np.sum(np.abs(dap) ** 2)))
    E0 = energy_coeffs(ctx, u, a, rho).total
    step = 1.0
    if trust > 0 and grad_norm > trust:
        step = trust / grad_norm
    for _ in range(max_backtracks):
        u_t = u - step * pu
        ap_t = a[neg:] - step * dap
        a_t = project_to_nehari_coeffs(ctx, u_t, ap_t, rho)
        E_t = energy_coeffs(ctx, u_t, a_t, rho).total
        if E_t <= E0 - 1e-4 * step * grad_norm ** 2:
            return u_t, a_t, E_t, grad_norm, step
        step *= 0.5
    return u, a, E0, grad_norm, 0.0


# ---------------------------------------------------------------------------
# mountain pass


def _slice_saddle(ctx: VariationalContext, rho: float, lam1: float):
    """Exact saddle of E restricted to (f + t, s phi_1)."""
    c = float(np.log(lam1 / rho))
    H, L = _background_moments(ctx)
    s_sq = (H * (np.exp(2 * c) - 1) + L * (np.exp(c) - 1)) / (rho * np.exp(c))
    return c, float(np.sqrt(max(s_sq, 0.0)))


def mountain_pass_search(basis: SpectralBasis, problem: LiouvilleProblem, rho: float,
                         path_points: int = 11, max_iters: int = 80,
                         tol: float = 1e-8, seed: int = 0) -> SearchResult:
    """Minimax over paths from (f, 0) to a low-energy state, 0 < rho < lambda_1."""
    ctx = VariationalContext(problem, basis)
    lam1 = basis.eigenvalue(1)
    # resonance outranks the range check so that rho pinned to lambda_1
    # itself reports the spectral clash, not a range violation
    if rho > 0:
        check_nonresonant(basis, rho)
    if not 0 < rho < lam1:
        raise InputError(f"mountain pass needs rho in (0, {lam1!r}); got {rho!r}")
    if path_points < 3:
        raise InputError("path needs at least 3 points")

    rng = np.random.default_rng(seed)
    f = ctx.f
    I_f = scalar_energy(ctx.ops, problem.h, problem.lam, f)
    neg = basis.num_negative
    npos = basis.num_positive
    e1 = np.zeros(npos, dtype=complex)
    e1[0] = 1.0

    c_star, s_star = _slice_saddle(ctx, rho, lam1)
    t_end = float(np.log((lam1 + 1.5) / rho))
    I_end = scalar_energy(ctx.ops, problem.h, problem.lam, f + t_end)
    s_end = float(np.sqrt((I_end - I_f + 1.0) / (2 * (rho * np.exp(t_end) - lam1))))

    info = {
        "branch": "mountain_pass",
        "rho": rho,
        "lambda_1": float(lam1),
        "slice_saddle_t": c_star,
        "slice_saddle_s": s_star,
        "path_end_t": t_end,
        "path_end_s": s_end,
        "energy_background": I_f,
        "restarts": 0,
    }

    def fresh_path(perturb: float):
        # piecewise-linear in (t, s) through the slice saddle
        half = path_points // 2 + 1
        t1 = np.linspace(0.0, c_star, half)
        s1 = np.linspace(0.0, s_star, half)
        t2 = np.linspace(c_star, t_end, path_points - half + 1)[1:]
        s2 = np.linspace(s_star, s_end, path_points - half + 1)[1:]
        nodes = []
        for t, s in zip(np.concatenate([t1, t2]), np.concatenate([s1, s2])):
            ap = s * e1
            if perturb > 0 and s > 0:
                bump = perturb * s * rng.standard_normal(min(3, npos))
                ap[: len(bump)] += bump
            a_full = project_to_nehari_coeffs(ctx, f + t, ap, rho)
            nodes.append([f + t, a_full])
        return nodes

    newton_tol = max(tol * 1e-2, 1e-12)

    def state_norm(u, a):
        return float(np.sqrt(
            h1_norm(ctx.ops, u - f) ** 2
            + np.sum(np.abs(basis.eigenvalues) * np.abs(a) ** 2)
        ))

    def try_newton(u, a, r):
        st = CoupledState(u=u, psi=ctx.ambient(ctx.from_spectral(a)), rho=r)
        refined, rep = newton_refine(st, basis, problem, tol=newton_tol)
        ok = bool(rep["converged"]) and rep["psi_norm"] >= 1e-8
        return refined, rep, ok

    records = []
    nodes = fresh_path(0.0)
    energies = [energy_coeffs(ctx, u_k, a_k, rho).total for u_k, a_k in nodes]
    k = int(np.argmax(energies[1:-1])) + 1
    info["path_max_initial"] = float(energies[k])
    records.append({
        "iteration": 0,
        "energy": float(energies[k]),
        "grad_norm": el_residual_norm(ctx, nodes[k][0], nodes[k][1], rho),
        "state_norm": state_norm(*nodes[k]),
    })

    # The fresh path runs through the exact slice saddle, which is already a
    # constrained critical point in the (t, s) plane; Newton from that node
    # resolves the remaining transversal directions directly.
    refined, report, ok = try_newton(nodes[k][0], nodes[k][1], rho)
    info["stage"] = "slice_newton"

    if not ok and rho < 0.45 * lam1:
        # Far below lambda_1 the slice saddle seeds poorly; walk the branch
        # down in rho from an anchor where the direct solve is reliable.
        info["stage"] = "continuation"
        anchor = 0.55 * lam1
        steps = max(2, int(np.ceil(abs(np.log(rho / anchor)) / np.log(1.25))) + 1)
        schedule = np.geomspace(anchor, rho, steps)
        c_a, s_a = _slice_saddle(ctx, anchor, lam1)
        u_c = f + c_a
        a_c = np.concatenate([np.zeros(neg, dtype=complex), s_a * e1])
        trail = []
        for r in schedule:
            refined, report, ok = try_newton(u_c, a_c, float(r))
            trail.append({"rho": float(r), "converged": ok,
                          "psi_norm": report["psi_norm"]})
            if not ok:
                break
            a_c = ctx.spectral_coeffs(ctx.constrained_coeffs(refined.psi))
            u_c = refined.u
            records.append({
                "iteration": len(records),
                "energy": energy_coeffs(ctx, u_c, a_c, float(r)).total,
                "grad_norm": el_residual_norm(ctx, u_c, a_c, float(r)),
                "state_norm": state_norm(u_c, a_c),
            })
        info["continuation"] = trail

    if not ok:
        # Last resort: deform the path by capped descent on its maximum and
        # hand promising ridge points to Newton as they appear.
        info["stage"] = "deformation"
        for restart in range(6):
            info["restarts"] = restart
            nodes = fresh_path(0.0 if restart == 0 else 0.2)
            for it in range(max_iters):
                energies = [energy_coeffs(ctx, u_k, a_k, rho).total
                            for u_k, a_k in nodes]
                k = int(np.argmax(energies[1:-1])) + 1
                u_k, a_k = nodes[k]
                u_n, a_n, E_n, gnorm, step = _descent_step(ctx, u_k, a_k, rho,
                                                           trust=0.5)
                nodes[k] = [u_n, a_n]
                rec = {
                    "iteration": len(records),
                    "energy": E_n,
                    "grad_norm": gnorm,
                    "state_norm": state_norm(u_n, a_n),
                }
                if it % 25 == 0 or gnorm <= tol:
                    st = CoupledState(u=u_n, psi=ctx.ambient(ctx.from_spectral(a_n)),
                                      rho=rho)
                    mu = multipliers(st, basis, problem)
                    rec["multiplier_sup"] = float(np.max(np.abs(mu))) if len(mu) else 0.0
                records.append(rec)
                stalled = step == 0.0
                if it % 15 == 14 or gnorm <= tol or stalled:
                    refined, report, ok = try_newton(u_n, a_n, rho)
                    if ok:
                        break
                if gnorm <= tol or stalled:
                    break
            if ok:
                break

    if ok:
        final_u = refined.u
        final_a = ctx.spectral_coeffs(ctx.constrained_coeffs(refined.psi))
    else:
        energies = [energy_coeffs(ctx, u_k, a_k, rho).total for u_k, a_k in nodes]
        k = int(np.argmax(energies[1:-1])) + 1
        final_u, final_a = nodes[k]

    el_final = el_residual_norm(ctx, final_u, final_a, rho)
    records.append({
        "iteration": len(records),
        "energy": energy_coeffs(ctx, final_u, final_a, rho).total,
        "grad_norm": el_final,
        "state_norm": state_norm(final_u, final_a),
    })
    state = CoupledState(u=final_u, psi=ctx.ambient(ctx.from_spectral(final_a)), rho=rho)
    eb = energy_coeffs(ctx, final_u, final_a, rho)
    G = constraint_values(ctx, final_u, final_a, rho)[:neg]
    info["newton"] = report
    info["energy_final"] = eb.total
    return SearchResult(
        state=state,
        energy=eb,
        el_residual=el_final,
        nehari_sup=float(np.max(np.abs(G))) if neg else 0.0,
        converged=ok,
        iterations=len(records),
        diagnostics=ps_diagnostics(records),
        info=info,
    )


# ---------------------------------------------------------------------------
# linking


@dataclass(frozen=True)
class LinkingConstants:
    k: int
    T: float
    A: float
    R: float
    c1: float
    c2: float
    c3: float
    c4: float
    margins: dict
    doublings: int


def _face_maxima(ctx, rho, lam_k1, cs, I_vals, tgrid):
    """Exact maxima of E over the three nontrivial boundary faces.

    Over each face the phi_2-dependence of E is a quadratic with
    nonpositive mode coefficients, so face maxima are attained either at
    phi_2 = 0 or with all mass on a single extremal mode; both are
    evaluated in closed form.
    """
    basis = ctx.basis
    lam_pos = basis.eigenvalues[basis.num_negative:]
    lam_low = lam_pos[:_positive_index(basis, rho)]
    A_sq, R_sq = cs["A"] ** 2, cs["R"] ** 2
    # side face ||phi_2|| = R, t in [0, T]
    side = -np.inf
    for t, I_t in zip(tgrid, I_vals):
        spine = 2 * A_sq * t * t * (lam_k1 - rho * np.exp(t))
        worst = np.max(2 * (lam_low - rho * np.exp(t)) * R_sq / lam_low)
        side = max(side, I_t + spine + worst)
    # top face t = T, ||phi_2|| <= R: maximum at phi_2 = 0
    T = tgrid[-1]
    top = I_vals[-1] + 2 * A_sq * T * T * (lam_k1 - rho * np.exp(T))
    # bottom face t = 0: maximum at phi_2 = 0 equals I(f) exactly;
    # report the worst nonzero-phi_2 value at the rim instead
    rim = I_vals[0] + float(np.max(2 * (lam_low - rho) * R_sq / lam_low))
    return {"side": side, "top": top, "rim": rim}


def _positive_index(basis: SpectralBasis, rho: float) -> int:
    """Number of positive eigenvalues strictly below rho."""
    lam_pos = basis.eigenvalues[basis.num_negative:]
    return int(np.searchsorted(lam_pos, rho))


def linking_constants(basis: SpectralBasis, problem: LiouvilleProblem,
                      rho: float) -> LinkingConstants:
    """Fix (T, A, R) for the linking geometry at lambda_k < rho < lambda_{k+1}.

    T is chosen so that rho e^T exceeds lambda_{k+1} by exactly one; A and
    R then absorb the scalar growth with a unit margin.  The boundary
    inequalities are verified by direct evaluation of the energy maxima
    over each face (closed form in the spinor directions, a t-grid for the
    scalar direction), doubling A or R on any failure.
    """
    ctx = VariationalContext(problem, basis)
    check_nonresonant(basis, rho)
    k = _positive_index(basis, rho)
    if k < 1:
        raise InputError(f"rho={rho!r} lies below lambda_1; use the mountain pass")
    if k >= basis.num_positive:
        raise InputError(f"rho={rho!r} lies above the computed spectrum")
    lam_pos = basis.eigenvalues[basis.num_negative:]
    lam_k, lam_k1 = float(lam_pos[k - 1]), float(lam_pos[k])

    H, L = _background_moments(ctx)
    c1 = H + L
    c2 = 2 * ctx.ops.area_g
    c3 = c1
    c4 = 2.0

    f = ctx.f
    I_f = scalar_energy(ctx.ops, problem.h, problem.lam, f)
    T = float(np.log((lam_k1 + 1.0) / rho))
    tgrid = np.linspace(0.0, T, 257)
    I_vals = np.array([scalar_energy(ctx.ops, problem.h, problem.lam, f + t)
                       for t in tgrid])

    growth_T = c1 * np.exp(2 * T) - c2 * T - c3
    A_sq = (max(growth_T, 0.0) + 1.0) / (2 * T * T * (rho * np.exp(T) - lam_k1))

    doublings = 0
    for _ in range(80):
        envelope = (c1 * np.exp(2 * tgrid) - c2 * tgrid - c3
                    + 2 * A_sq * tgrid ** 2 * (lam_k1 - rho * np.exp(tgrid)))
        R_sq = (max(float(np.max(envelope)), 0.0) + 1.0) / (c4 * (rho / lam_k - 1.0))
        cs = {"A": float(np.sqrt(A_sq)), "R": float(np.sqrt(R_sq))}
        margins = _face_maxima(ctx, rho, lam_k1, cs, I_vals, tgrid)
        margins = {key: I_f - val for key, val in margins.items()}
        if all(v >= 0 for v in margins.values()):
            return LinkingConstants(
                k=k, T=T, A=cs["A"], R=cs["R"],
                c1=float(c1), c2=float(c2), c3=float(c3), c4=c4,
                margins={key: float(v) for key, v in margins.items()},
                doublings=doublings,
            )
        A_sq *= 2.0
        doublings += 1
    raise SolverError("linking constants did not stabilize after 80 doublings")


def _sample_sphere_minus_cone(ctx, rho, k, r, n_samples, rng):
    """Points of the dual linking set: radius-r states with no low-mode
    spinor content, completed onto the constraint set."""
    basis = ctx.basis
    neg = basis.num_negative
    npos = basis.num_positive
    V = ctx.ops.mesh.num_vertices
    lam_abs = np.abs(basis.eigenvalues)
    out = []
    for _ in range(n_samples):
        raw = rng.standard_normal(V)
        du = ctx.gram_solve(raw)  # smooth H^1 direction
        du -= float(np.mean(du))
        nu = h1_norm(ctx.ops, du)
        du = du / nu * rng.uniform(0.0, 0.4)
        ap = np.zeros(npos, dtype=complex)
        hi = slice(k, min(k + 8, npos))
        width = hi.stop - hi.start
        ap[hi] = rng.standard_normal(width) + 1j * rng.standard_normal(width)
        for _ in range(3):
            a_full = project_to_nehari_coeffs(ctx, ctx.f + du, ap, rho)
            dist = np.sqrt(h1_norm(ctx.ops, du) ** 2
                           + float(np.sum(lam_abs * np.abs(a_full) ** 2)))
            scale = r / dist
            du = du * scale
            ap = ap * scale
        a_full = project_to_nehari_coeffs(ctx, ctx.f + du, ap, rho)
        out.append((ctx.f + du, a_full))
    return out


def linking_search(basis: SpectralBasis, problem: LiouvilleProblem, rho: float,
                   samples: int = 48, max_iters: int = 60,
                   tol: float = 1e-8, seed: int = 0) -> SearchResult:
    """Saddle search in the linking regime lambda_k < rho < lambda_{k+1}.

    The linking sets are used as verified seed generators: boundary-face
    energies are checked against I(f), the dual set is sampled for its
    energy gap above I(f), and Newton certification runs from the
    resonance-style interior seeds.
    """
    ctx = VariationalContext(problem, basis)
    cs = linking_constants(basis, problem, rho)
    k = cs.k
    rng = np.random.default_rng(seed)
    neg = basis.num_negative
    npos = basis.num_positive
    lam_pos = basis.eigenvalues[neg:]
    lam_k1 = float(lam_pos[k])
    f = ctx.f
    I_f = scalar_energy(ctx.ops, problem.h, problem.lam, f)

    # boundary of the linking cylinder: sampled directly
    boundary_max = -np.inf
    for _ in range(samples):
        t = rng.uniform(0.0, cs.T)
        face = rng.integers(0, 3)
        if face == 0:
            t = 0.0
        elif face == 1:
            t = cs.T
        ap = np.zeros(npos, dtype=complex)
        z = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        half = np.sqrt(np.sum(lam_pos[:k] * np.abs(z) ** 2))
        radius = cs.R if face == 2 else cs.R * rng.uniform(0.0, 1.0)
        ap[:k] = z / half * radius
        ap[k] = cs.A * t
        a_full = project_to_nehari_coeffs(ctx, f + t, ap, rho)
        boundary_max = max(boundary_max, energy_coeffs(ctx, f + t, a_full, rho).total)

    # dual set: small sphere around (f, 0) avoiding low spinor modes
    r_link = 0.05
    link_min = np.inf
    for u_s, a_s in _sample_sphere_minus_cone(ctx, rho, k, r_link, samples, rng):
        link_min = min(link_min, energy_coeffs(ctx, u_s, a_s, rho).total)

    info = {
        "branch": "linking",
        "rho": rho,
        "k": k,
        "lambda_k": float(lam_pos[k - 1]),
        "lambda_k_plus_1": lam_k1,
        "constants": {"T": cs.T, "A": cs.A, "R": cs.R,
                      "c1": cs.c1, "c2": cs.c2, "c3": cs.c3, "c4": cs.c4},
        "face_margins": cs.margins,
        "doublings": cs.doublings,
        "boundary_energy_max": float(boundary_max),
        "energy_background": I_f,
        "link_radius": r_link,
        "link_energy_min": float(link_min),
        "link_gap_constant": float((link_min - I_f) / r_link ** 2),
    }

    # interior seeds: the resonance shift at mode k+1 satisfies the spinor
    # equation exactly; fall back to perturbed copies
    c = float(np.log(lam_k1 / rho))
    H, L = _background_moments(ctx)
    s_sq = (H * (np.exp(2 * c) - 1) + L * (np.exp(c) - 1)) / (rho * np.exp(c))
    s = float(np.sqrt(max(s_sq, 0.0)))
    seeds = []
    base = np.zeros(npos, dtype=complex)
    base[k] = s
    seeds.append((f + c, base))
    for j in range(4):
        ap = base.copy()
        ap[k] *= 1.0 + 0.15 * rng.standard_normal()
        jitter = 0.05 * s * (rng.standard_normal(npos) + 1j * rng.standard_normal(npos))
        keep = min(k + 6, npos)
        ap[:keep] += jitter[:keep]
        seeds.append((f + c * rng.uniform(0.8, 1.2), ap))

    records = []
    report = {"converged": False}
    final_u = final_a = None
    for attempt, (u_s, ap_s) in enumerate(seeds):
        a_s = project_to_nehari_coeffs(ctx, u_s, ap_s, rho)
        st = CoupledState(u=u_s, psi=ctx.ambient(ctx.from_spectral(a_s)), rho=rho)
        refined, report = newton_refine(st, basis, problem, tol=max(tol * 1e-2, 1e-12),
                                        max_iters=max_iters)
        a_ref = ctx.spectral_coeffs(ctx.constrained_coeffs(refined.psi))
        rec = {
            "iteration": attempt,
            "energy": energy_coeffs(ctx, refined.u, a_ref, rho).total,
            "grad_norm": report["residual"],
            "state_norm": float(np.sqrt(
                h1_norm(ctx.ops, refined.u - f) ** 2
                + np.sum(np.abs(basis.eigenvalues) * np.abs(a_ref) ** 2))),
        }
        records.append(rec)
        if report["converged"] and report["psi_norm"] >= 1e-8:
            final_u, final_a = refined.u, a_ref
            info["seed_attempts"] = attempt + 1
            break
    else:
        final_u, final_a = refined.u, a_ref
        info["seed_attempts"] = len(seeds)

    eb = energy_coeffs(ctx, final_u, final_a, rho)
    G = constraint_values(ctx, final_u, final_a, rho)[:neg]
    info["newton"] = report
    info["energy_final"] = eb.total
    state = CoupledState(u=final_u, psi=ctx.ambient(ctx.from_spectral(final_a)), rho=rho)
    return SearchResult(
        state=state,
        energy=eb,
        el_residual=el_residual_norm(ctx, final_u, final_a, rho),
        nehari_sup=float(np.max(np.abs(G))) if neg else 0.0,
        converged=bool(report.get("converged", False)),
        iterations=len(records),
        diagnostics=ps_diagnostics(records),
        info=info,
    )
