"""End-to-end guarantees for the discretization and both saddle searches.

Each test pins one externally checkable property with a fixed tolerance,
and the two search tests additionally enforce a wall-clock budget at their
stated problem size.  Tolerances were frozen against independent
measurements before the tests were written; loosening them is a behavior
change, not a cleanup.
"""

import time

import numpy as np

from superliouville import (
    VariationalContext,
    assemble_dirac,
    build_disk_with_holes,
    conformal_push,
    dirac_apply,
    gauss_bonnet_defect,
    h1_norm,
    linking_search,
    mountain_pass_search,
    mt_inequality_gap,
    multipliers,
    reference_conformal_factor,
    solve_liouville,
    solve_weighted_spectrum,
)
from superliouville.energy import energy_coeffs, energy_partials_coeffs
from superliouville.liouville import scalar_energy
from superliouville.nehari import constraint_values, project_to_nehari_coeffs
from superliouville.spectral import lowest_magnitudes

from conftest import HOLES, add_spectrum, build_pipeline, smooth_field, smooth_spinor


def bump_h(mesh):
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return -1.0 - 0.5 * np.exp(-(x ** 2 + y ** 2) / (2 * 0.3 ** 2))


def background_energy(pipe):
    p = pipe["problem"]
    return scalar_energy(pipe["ops"], p.h, p.lam, pipe["sol"].f)


def test_gauss_bonnet_defect_small_and_shrinking():
    t0 = time.monotonic()
    defects = []
    for th in (0.16, 0.08, 0.04):
        mesh = build_disk_with_holes(1.0, HOLES, target_h=th, seed=0)
        phi = reference_conformal_factor(mesh)
        defects.append(abs(gauss_bonnet_defect(mesh, phi)))
    bound = 0.05 * abs(2.0 * np.pi * mesh.euler_characteristic)
    assert all(d <= bound for d in defects)
    assert defects[0] > defects[1] > defects[2]
    assert time.monotonic() - t0 < 10.0


def test_background_solve_exact_flat_and_start_independent():
    t0 = time.monotonic()
    flat = build_pipeline(0.08)
    assert flat["sol"].iterations == 0
    assert np.max(np.abs(flat["sol"].f)) <= 1e-10

    curved = build_pipeline(0.08, h_fn=bump_h)
    V = curved["mesh"].num_vertices
    rng = np.random.default_rng(1)
    solutions = [curved["sol"].f]
    for scale in (0.5, 2.0):
        alt = solve_liouville(curved["problem"],
                              init=scale * rng.standard_normal(V))
        solutions.append(alt.f)
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            dist = h1_norm(curved["ops"], solutions[i] - solutions[j])
            assert dist <= 1e-6
    assert time.monotonic() - t0 < 30.0


def test_dirac_matrix_hermitian_with_gapped_pencil():
    from superliouville import boundary_pairing

    for th in (0.16, 0.08, 0.04):
        pipe = build_pipeline(th)
        D = assemble_dirac(pipe["mesh"], pipe["phi"], sign=+1)
        diff = D.A1 - D.A1.conj().T
        worst = float(np.abs(diff.data).max()) if diff.nnz else 0.0
        assert worst == 0.0
        assert lowest_magnitudes(D, pipe["sol"].f, k=2)[0] >= 0.5

    rng = np.random.default_rng(2)
    nc = D.num_constrained
    for _ in range(100):
        za = rng.standard_normal(nc) + 1j * rng.standard_normal(nc)
        zb = rng.standard_normal(nc) + 1j * rng.standard_normal(nc)
        pa = (D.P @ za).reshape(-1, 2)
        pb = (D.P @ zb).reshape(-1, 2)
        assert abs(boundary_pairing(D, pa, pb)) <= 1e-10


def test_spectrum_orthonormal_shift_covariant_and_refinement_stable(pants):
    basis = pants["basis"]
    X, Bd = basis.vectors, basis.Bd
    gram = X.conj().T @ (Bd[:, None] * X)
    assert np.max(np.abs(gram - np.eye(gram.shape[0]))) <= 1e-8

    c = 0.4
    shifted = solve_weighted_spectrum(pants["dirac"], pants["sol"].f + c)
    cutoff = 2.0 / pants["mesh"].h
    checked = 0
    for j in range(1, basis.num_positive + 1):
        for sj in (j, -j):
            if abs(sj) > (basis.num_positive if sj > 0 else basis.num_negative):
                continue
            lam = basis.eigenvalue(sj)
            if abs(lam) > cutoff:
                continue
            rel = abs(shifted.eigenvalue(sj) - np.exp(-c) * lam) / abs(lam)
            assert rel <= 1e-8
            checked += 1
    assert checked >= 10

    lam1 = []
    for th in (0.03, 0.015):
        pipe = build_pipeline(th, h_fn=bump_h)
        D = assemble_dirac(pipe["mesh"], pipe["phi"], sign=+1)
        lam1.append(float(lowest_magnitudes(D, pipe["sol"].f, k=2)[0]))
    assert abs(lam1[0] - lam1[1]) / lam1[1] <= 0.01


def test_dirac_conformal_covariance_defect_second_order():
    rng = np.random.default_rng(7)
    coeff_sets = [rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8))
                  for _ in range(10)]
    defects = []
    for th in (0.2, 0.1, 0.05):
        mesh = build_disk_with_holes(1.0, HOLES, target_h=th, seed=0)
        x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
        phi0 = 0.1 * x + 0.1 * y * y
        dphi = 0.25 * x - 0.15 * y + 0.1 * (x * x + y * y)
        Dg = assemble_dirac(mesh, phi0, sign=+1)
        Dgt = assemble_dirac(mesh, phi0 + dphi, sign=+1)
        interior = np.ones(mesh.num_vertices, dtype=bool)
        interior[np.concatenate(mesh.boundary_loops)] = False
        w = Dgt.mass_g_diag
        level = []
        for cs in coeff_sets:
            psi = smooth_spinor(mesh, cs)
            lhs = dirac_apply(Dgt, conformal_push(psi, dphi))
            rhs = np.exp(-1.5 * dphi)[:, None] * dirac_apply(Dg, psi)
            diff = lhs - rhs
            num = np.sqrt(np.sum(
                w[interior] * np.sum(np.abs(diff[interior]) ** 2, axis=1)))
            den = np.sqrt(np.sum(w * np.sum(np.abs(psi) ** 2, axis=1)))
            level.append(num / den)
        defects.append(np.array(level))
    # halving h must cut every defect by at least 2x (second order gives ~4x)
    assert np.min(defects[0] / defects[1]) >= 2.0
    assert np.min(defects[1] / defects[2]) >= 2.0


def test_energy_gradient_matches_finite_differences(pants):
    ctx = VariationalContext(pants["problem"], pants["basis"])
    lam = ctx.basis.eigenvalues
    n = len(lam)
    damp = np.exp(-np.abs(lam))
    mesh = pants["mesh"]
    rho = 0.5 * ctx.basis.eigenvalue(1)
    rng = np.random.default_rng(17)
    t = 1e-5
    worst = 0.0
    for _ in range(20):
        u = ctx.f + 0.2 * smooth_field(mesh, rng.standard_normal(8))
        a = 0.3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * damp
        du, da = energy_partials_coeffs(ctx, u, a, rho)
        for _ in range(5):
            v = smooth_field(mesh, rng.standard_normal(8))
            e = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * damp
            analytic = float(du @ v) + 2.0 * float(np.real(np.vdot(e, da)))
            fd = (energy_coeffs(ctx, u + t * v, a + t * e, rho).total
                  - energy_coeffs(ctx, u - t * v, a - t * e, rho).total) / (2 * t)
            rel = abs(fd - analytic) / max(abs(fd), abs(analytic), 1e-8)
            worst = max(worst, rel)
    assert worst <= 1e-6


def test_nehari_projection_exact_and_mesh_stable(pants, pants_mid):
    basis = pants["basis"]
    ctx = VariationalContext(pants["problem"], basis)
    neg = basis.num_negative
    rho = 0.7

    # pure first-mode data at the background is its own projection
    ap = np.zeros(basis.num_positive, dtype=complex)
    ap[0] = 0.8
    a = project_to_nehari_coeffs(ctx, ctx.f, ap, rho)
    assert np.linalg.norm(a[:neg]) <= 1e-10

    # generic states: the constraint block is driven to round-off
    rng = np.random.default_rng(3)
    u = ctx.f + smooth_field(pants["mesh"], 0.3 * rng.standard_normal(8))
    ap = rng.standard_normal(basis.num_positive) \
        + 1j * rng.standard_normal(basis.num_positive)
    ap /= np.linalg.norm(ap)
    a = project_to_nehari_coeffs(ctx, u, ap, rho)
    sup = float(np.max(np.abs(constraint_values(ctx, u, a, rho)[:neg])))
    assert sup <= 1e-9

    # the induced negative-part response is a mesh-stable constant when the
    # positive data lives in modes both meshes resolve
    nlow = 12
    fitted = []
    for pipe in (pants, pants_mid):
        ctx_i = VariationalContext(pipe["problem"], pipe["basis"])
        neg_i = pipe["basis"].num_negative
        npos_i = pipe["basis"].num_positive
        rng = np.random.default_rng(3)
        C = 0.0
        for _ in range(40):
            du = smooth_field(pipe["mesh"], 0.3 * rng.standard_normal(8))
            ap = np.zeros(npos_i, dtype=complex)
            ap[:nlow] = rng.standard_normal(nlow) + 1j * rng.standard_normal(nlow)
            ap /= np.linalg.norm(ap)
            a = project_to_nehari_coeffs(ctx_i, ctx_i.f + du, ap, rho)
            C = max(C, np.linalg.norm(a[:neg_i]) / (rho * np.linalg.norm(ap)))
        fitted.append(C)
    assert max(fitted) < 0.5
    assert abs(fitted[0] - fitted[1]) / max(fitted) <= 0.2


def test_mountain_pass_certifies_nontrivial_saddle_at_scale():
    t0 = time.monotonic()
    pipe = add_spectrum(build_pipeline(0.042))
    basis, problem = pipe["basis"], pipe["problem"]
    rho = 0.5 * basis.eigenvalue(1)
    result = mountain_pass_search(basis, problem, rho, seed=0)
    I_f = background_energy(pipe)
    ctx = VariationalContext(problem, basis)
    a = ctx.spectral_coeffs(ctx.constrained_coeffs(result.state.psi))
    assert result.converged
    assert result.el_residual <= 1e-8
    assert result.nehari_sup <= 1e-8
    assert np.linalg.norm(a) >= 1e-3
    assert result.energy.total - I_f > 0.1
    mus = multipliers(result.state, basis, problem)
    assert np.max(np.abs(mus)) <= 1e-6
    assert time.monotonic() - t0 < 600.0


def test_linking_certifies_saddle_between_first_two_levels_at_scale():
    t0 = time.monotonic()
    pipe = add_spectrum(build_pipeline(0.055))
    basis, problem = pipe["basis"], pipe["problem"]
    rho = 0.5 * (basis.eigenvalue(1) + basis.eigenvalue(2))
    result = linking_search(basis, problem, rho, seed=0)
    I_f = background_energy(pipe)
    ctx = VariationalContext(problem, basis)
    a = ctx.spectral_coeffs(ctx.constrained_coeffs(result.state.psi))
    info = result.info
    assert result.converged
    assert result.el_residual <= 1e-8
    assert np.linalg.norm(a) >= 1e-3
    assert result.energy.total > I_f
    assert info["boundary_energy_max"] <= I_f + 1e-6
    assert info["link_energy_min"] >= I_f - 1e-6
    assert info["link_gap_constant"] > 0.0
    assert info["seed_attempts"] == 1
    assert time.monotonic() - t0 < 1800.0


def test_background_energy_locally_coercive(pants):
    ops, problem, f = pants["ops"], pants["problem"], pants["sol"].f
    I_f = background_energy(pants)
    rng = np.random.default_rng(11)
    C_min = np.inf
    for _ in range(500):
        d = smooth_field(pants["mesh"], rng.standard_normal(8))
        r = rng.uniform(0.005, 0.1)
        d *= r / h1_norm(ops, d)
        gain = scalar_energy(ops, problem.h, problem.lam, f + d) - I_f
        C_min = min(C_min, gain / r ** 2)
    assert C_min > 0.1


def test_exponential_integral_gaps_bounded_and_mesh_stable():
    stats = []
    for th in (0.14, 0.07):
        ops = build_pipeline(th)["ops"]
        rng = np.random.default_rng(5)
        gap_int = gap_bdry = -np.inf
        for _ in range(1000):
            u = smooth_field(ops.mesh, rng.standard_normal(8))
            u /= h1_norm(ops, u)
            gap_int = max(gap_int, mt_inequality_gap(ops, u, "interior"))
            gap_bdry = max(gap_bdry, mt_inequality_gap(ops, u, "boundary"))
        stats.append((gap_int, gap_bdry))
    for k in range(2):
        worst = max(stats[0][k], stats[1][k])
        assert worst <= 4.0
        assert abs(stats[0][k] - stats[1][k]) / worst <= 0.10
