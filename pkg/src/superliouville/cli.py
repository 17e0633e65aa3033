"""Command-line front end.

Subcommands: mesh, liouville, spectrum, solve, sweep, verify, report.
Global flags: --config PATH, --out DIR, --seed N, --tol X.  Exit codes:
0 success, 1 solver failure, 2 invalid input.  Without --config the
built-in default configuration (a pair of pants with two symmetric
holes) is used.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coeffs import boundary_coefficient, interior_coefficient
from .config import RunConfig, apply_overrides, load_config
from .curvature import gauss_bonnet_defect, reference_conformal_factor
from .dirac import assemble_dirac, boundary_pairing
from .energy import CoupledState, VariationalContext, energy_coeffs, grad_energy
from .errors import InputError, ResonanceError, SolverError
from .fem import (
    AssemblyError,
    assemble_operators,
    h1_norm,
    mt_inequality_gap,
    save_field_csv,
)
from .liouville import (
    LiouvilleProblem,
    normalize_metric,
    scalar_energy,
    solve_liouville,
)
from .mesh import MeshError, TriMesh, build_disk_with_holes, load_mesh, save_mesh
from .nehari import project_to_nehari_coeffs
from .report import (
    load_spinor_csv,
    plot_energy_history,
    plot_scalar_field,
    plot_spectrum,
    plot_spinor_magnitude,
    plot_sweep,
    read_manifest,
    save_spinor_csv,
    write_manifest,
    write_rows_csv,
)
from .search import (
    check_nonresonant,
    linking_search,
    mountain_pass_search,
    ps_diagnostics,
)
from .spectral import solve_weighted_spectrum, spectrum_csv

__version__ = "0.1.0"


def _mesh_hash(mesh: TriMesh) -> str:
    hasher = hashlib.sha256()
    hasher.update(np.ascontiguousarray(mesh.vertices).tobytes())
    hasher.update(np.ascontiguousarray(mesh.triangles).tobytes())
    return hasher.hexdigest()[:16]


@dataclass
class Pipeline:
    cfg: RunConfig
    mesh: TriMesh
    phi: np.ndarray
    ops: object
    h: np.ndarray
    lam: np.ndarray
    problem: LiouvilleProblem
    solution: object
    dirac: object = None
    basis: object = None

    @property
    def f(self):
        return self.solution.f


def _build_mesh(cfg: RunConfig) -> TriMesh:
    return build_disk_with_holes(cfg.outer_radius, cfg.holes, cfg.target_h,
                                 seed=cfg.mesh_seed)


def build_pipeline(cfg: RunConfig, need_spectrum: bool = True,
                   mesh: TriMesh = None) -> Pipeline:
    mesh = mesh if mesh is not None else _build_mesh(cfg)
    V = mesh.num_vertices
    phi = (normalize_metric(mesh, np.zeros(V)) if cfg.normalize
           else np.zeros(V))
    ops = assemble_operators(mesh, phi)
    h = interior_coefficient(mesh, cfg.h_text)
    lam = boundary_coefficient(mesh, cfg.lam_text)
    problem = LiouvilleProblem(ops, h, lam, normalized=cfg.normalize)
    solution = solve_liouville(problem, tol=min(cfg.tol, 1e-10))
    pipe = Pipeline(cfg=cfg, mesh=mesh, phi=phi, ops=ops, h=h, lam=lam,
                    problem=problem, solution=solution)
    if need_spectrum:
        pipe.dirac = assemble_dirac(mesh, phi, sign=cfg.boundary_sign)
        count = cfg.spectrum_count if cfg.spectrum_count == "all" else int(cfg.spectrum_count)
        pipe.basis = solve_weighted_spectrum(pipe.dirac, solution.f, count=count)
    return pipe


# ---------------------------------------------------------------------------
# subcommands


def cmd_mesh(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mesh = _build_mesh(cfg)
    save_mesh(mesh, out / "mesh.txt")
    defect = gauss_bonnet_defect(mesh, reference_conformal_factor(mesh))
    payload = {
        "chi": mesh.euler_characteristic,
        "defect": abs(defect),
        "vertices": mesh.num_vertices,
        "triangles": mesh.num_triangles,
        "loops": mesh.num_loops,
        "h_max": mesh.h,
        "hash": _mesh_hash(mesh),
    }
    if args.refine:
        fine_cfg = dataclasses.replace(cfg, target_h=cfg.target_h / 2)
        fine = _build_mesh(fine_cfg)
        save_mesh(fine, out / "mesh_fine.txt")
        defect_fine = gauss_bonnet_defect(fine, reference_conformal_factor(fine))
        payload["defect_fine"] = abs(defect_fine)
        payload["defect_ratio"] = abs(defect) / max(abs(defect_fine), 1e-300)
    write_manifest(out / "mesh.json", payload)
    print(f"chi = {payload['chi']}, defect = {payload['defect']:.6g} "
          f"({mesh.num_vertices} vertices) -> {out / 'mesh.json'}")
    return 0


def cmd_liouville(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipe = build_pipeline(cfg, need_spectrum=False)
    save_mesh(pipe.mesh, out / "mesh.txt")
    save_field_csv(out / "f.csv", pipe.f)
    payload = {
        "energy": scalar_energy(pipe.ops, pipe.h, pipe.lam, pipe.f),
        "iterations": pipe.solution.iterations,
        "residual_norm": pipe.solution.residual_norm,
        "hessian_pd": pipe.solution.hessian_pd,
        "c0": pipe.solution.c0,
        "area": pipe.ops.area_g,
        "boundary_length": pipe.ops.boundary_length_g,
        "mt_gap_interior": mt_inequality_gap(pipe.ops, pipe.f, "interior"),
        "mt_gap_boundary": mt_inequality_gap(pipe.ops, pipe.f, "boundary"),
        "mesh_hash": _mesh_hash(pipe.mesh),
    }
    write_manifest(out / "liouville.json", payload)
    print(f"background solved: energy {payload['energy']:.8g}, "
          f"residual {payload['residual_norm']:.3g} -> {out / 'f.csv'}")
    return 0


def cmd_spectrum(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipe = build_pipeline(cfg)
    save_mesh(pipe.mesh, out / "mesh.txt")
    save_field_csv(out / "f.csv", pipe.f)
    spectrum_csv(pipe.basis, out / "spectrum.csv")
    plot_spectrum(pipe.basis.eigenvalues, None, out / "spectrum.svg")
    basis = pipe.basis
    payload = {
        "num_modes": len(basis.eigenvalues),
        "num_positive": basis.num_positive,
        "num_negative": basis.num_negative,
        "kernel_dimension": basis.kernel_dimension,
        "lambda_1": basis.eigenvalue(1) if basis.num_positive else None,
        "lambda_minus_1": basis.eigenvalue(-1) if basis.num_negative else None,
        "boundary_sign": cfg.boundary_sign,
        "mesh_hash": _mesh_hash(pipe.mesh),
    }
    write_manifest(out / "spectrum.json", payload)
    print(f"{payload['num_modes']} modes, lambda_1 = {payload['lambda_1']:.8g} "
          f"-> {out / 'spectrum.csv'}")
    return 0


def _choose_branch(cfg: RunConfig, basis) -> str:
    if cfg.branch != "auto":
        return cfg.branch
    lam1 = basis.eigenvalue(1)
    return "mountain_pass" if cfg.rho < lam1 else "linking"


def _run_search(cfg: RunConfig, pipe: Pipeline, rho: float):
    branch = _choose_branch(cfg, pipe.basis)
    if branch == "mountain_pass":
        result = mountain_pass_search(
            pipe.basis, pipe.problem, rho,
            path_points=cfg.path_points, max_iters=cfg.max_iters,
            tol=cfg.tol, seed=cfg.seed)
    else:
        result = linking_search(
            pipe.basis, pipe.problem, rho,
            samples=cfg.samples, max_iters=cfg.max_iters,
            tol=cfg.tol, seed=cfg.seed)
    return branch, result


def _write_solution(out: Path, cfg: RunConfig, pipe: Pipeline, branch, result) -> None:
    save_mesh(pipe.mesh, out / "mesh.txt")
    save_field_csv(out / "f.csv", pipe.f)
    spectrum_csv(pipe.basis, out / "spectrum.csv")
    save_field_csv(out / "state_u.csv", result.state.u)
    save_spinor_csv(out / "state_psi.csv", result.state.psi)
    plot_spectrum(pipe.basis.eigenvalues, result.state.rho, out / "spectrum.svg")
    plot_energy_history(result.diagnostics, out / "energy.svg")
    plot_scalar_field(pipe.mesh, result.state.u, out / "u.svg",
                      "scalar component u", cbar_label="u")
    plot_spinor_magnitude(pipe.mesh, result.state.psi, out / "psi.svg")
    psi_norm = float(np.sqrt(np.sum(np.abs(result.state.psi) ** 2)))
    I_f = scalar_energy(pipe.ops, pipe.h, pipe.lam, pipe.f)
    manifest = {
        "package_version": __version__,
        "config": cfg.to_dict(),
        "mesh": {
            "vertices": pipe.mesh.num_vertices,
            "triangles": pipe.mesh.num_triangles,
            "loops": pipe.mesh.num_loops,
            "chi": pipe.mesh.euler_characteristic,
            "h_max": pipe.mesh.h,
            "hash": _mesh_hash(pipe.mesh),
        },
        "background": {
            "energy": I_f,
            "iterations": pipe.solution.iterations,
            "residual_norm": pipe.solution.residual_norm,
        },
        "spectrum": {
            "lambda_1": pipe.basis.eigenvalue(1),
            "lambda_minus_1": pipe.basis.eigenvalue(-1),
            "kernel_dimension": pipe.basis.kernel_dimension,
            "num_modes": len(pipe.basis.eigenvalues),
        },
        "branch": branch,
        "search": result.info,
        "result": {
            "energy": result.energy.total,
            "energy_scalar": result.energy.scalar,
            "energy_spinor": result.energy.spinor,
            "el_residual": result.el_residual,
            "nehari_sup": result.nehari_sup,
            "converged": result.converged,
            "psi_norm": psi_norm,
            "nontrivial": bool(psi_norm >= 1e-3),
            "energy_above_background": result.energy.total > I_f,
            "iterations": result.iterations,
        },
        "outputs": ["mesh.txt", "f.csv", "spectrum.csv", "state_u.csv",
                    "state_psi.csv", "spectrum.svg", "energy.svg", "u.svg",
                    "psi.svg"],
    }
    write_manifest(out / "manifest.json", manifest)


def cmd_solve(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipe = build_pipeline(cfg)
    check_nonresonant(pipe.basis, cfg.rho)
    branch, result = _run_search(cfg, pipe, cfg.rho)
    _write_solution(out, cfg, pipe, branch, result)
    if not result.converged:
        raise SolverError(
            f"{branch} search did not certify a critical point "
            f"(residual {result.el_residual:.3g}); diagnostics in "
            f"{out / 'manifest.json'}")
    print(f"branch {branch}: energy {result.energy.total:.8g}, "
          f"EL residual {result.el_residual:.3g} -> {out / 'manifest.json'}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    if not cfg.rho_sweep:
        raise InputError("sweep needs a [sweep] rhos list in the config")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pipe = build_pipeline(cfg)
    save_mesh(pipe.mesh, out / "mesh.txt")
    rows = []
    plot_rows = []
    any_ok = False
    for rho in cfg.rho_sweep:
        tag = f"rho_{rho:g}".replace(".", "p").replace("-", "m")
        try:
            check_nonresonant(pipe.basis, rho)
        except ResonanceError as exc:
            print(f"skipping rho={rho:g}: resonant "
                  f"(eigenvalue {exc.nearest_eigenvalue:.8g})", file=sys.stderr)
            rows.append([repr(float(rho)), "", "", "", "", "resonant"])
            continue
        sub_cfg = dataclasses.replace(cfg, rho=float(rho))
        run_dir = out / tag
        run_dir.mkdir(exist_ok=True)
        try:
            branch, result = _run_search(sub_cfg, pipe, float(rho))
        except SolverError as exc:
            print(f"rho={rho:g} failed: {exc}", file=sys.stderr)
            rows.append([repr(float(rho)), "", "", "", "", "failed"])
            continue
        _write_solution(run_dir, sub_cfg, pipe, branch, result)
        psi_norm = float(np.sqrt(np.sum(np.abs(result.state.psi) ** 2)))
        status = "converged" if result.converged else "not_converged"
        any_ok = any_ok or result.converged
        rows.append([repr(float(rho)), branch, repr(result.energy.total),
                     repr(psi_norm), repr(result.el_residual), status])
        plot_rows.append((float(rho), result.energy.total, psi_norm,
                          result.converged))
    write_rows_csv(out / "sweep.csv",
                   ["rho", "branch", "energy", "psi_norm", "el_residual", "status"],
                   rows)
    plot_sweep(plot_rows, out / "sweep.svg")
    print(f"swept {len(cfg.rho_sweep)} rho values -> {out / 'sweep.csv'}")
    return 0 if any_ok else 1


def cmd_report(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    manifest = read_manifest(out / "manifest.json")
    try:
        mesh = load_mesh(out / "mesh.txt")
        u = np.loadtxt(out / "state_u.csv", delimiter=",", skiprows=1)[:, 1]
        psi = load_spinor_csv(out / "state_psi.csv")
        spec = np.loadtxt(out / "spectrum.csv", delimiter=",", skiprows=1)
    except OSError as exc:
        raise InputError(f"incomplete run directory {out}: {exc}") from None
    rho = manifest.get("config", {}).get("rho")
    plot_spectrum(spec[:, 1], rho, out / "spectrum.svg")
    plot_scalar_field(mesh, u, out / "u.svg", "scalar component u", cbar_label="u")
    plot_spinor_magnitude(mesh, psi, out / "psi.svg")
    hist = manifest.get("search", {}).get("newton", {}).get("residual_history", [])
    energy_final = manifest.get("result", {}).get("energy", 0.0)
    records = [
        {"iteration": i, "energy": energy_final, "grad_norm": r, "state_norm": 0.0}
        for i, r in enumerate(hist)
    ]
    plot_energy_history(ps_diagnostics(records), out / "energy.svg")
    print(f"re-rendered figures in {out}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _verify_checks(cfg: RunConfig):
    """Yield (name, gated, callable) check triples."""

    shared = {}

    def get_mesh():
        if "mesh" not in shared:
            shared["mesh"] = _build_mesh(cfg)
        return shared["mesh"]

    def get_pipe():
        if "pipe" not in shared:
            shared["pipe"] = build_pipeline(cfg, need_spectrum=False,
                                            mesh=get_mesh())
        return shared["pipe"]

    def get_small():
        # eigensolver-heavy checks run on a bounded-size mesh so verify
        # stays fast regardless of the configured resolution
        if "small" not in shared:
            small_cfg = dataclasses.replace(cfg, target_h=max(cfg.target_h, 0.14))
            shared["small"] = build_pipeline(small_cfg)
        return shared["small"]

    def check_coefficients():
        mesh = get_mesh()
        interior_coefficient(mesh, cfg.h_text)
        boundary_coefficient(mesh, cfg.lam_text)
        return f"h = {cfg.h_text!r}, lambda = {cfg.lam_text!r} nonpositive"

    def check_chi():
        chi = get_mesh().euler_characteristic
        if chi >= 0:
            raise AssertionError(f"chi = {chi} is not negative")
        return f"chi = {chi}"

    def check_gauss_bonnet():
        mesh = get_mesh()
        defect = abs(gauss_bonnet_defect(mesh, reference_conformal_factor(mesh)))
        bound = 0.05 * abs(2 * np.pi * mesh.euler_characteristic)
        if defect > bound:
            raise AssertionError(f"defect {defect:.4g} > {bound:.4g}")
        return f"defect {defect:.4g} <= {bound:.4g}"

    def check_liouville_exact():
        mesh = get_mesh()
        phi = normalize_metric(mesh, np.zeros(mesh.num_vertices))
        ops = assemble_operators(mesh, phi)
        problem = LiouvilleProblem(ops, np.full(mesh.num_vertices, -1.0),
                                   np.zeros(mesh.num_vertices))
        sol = solve_liouville(problem)
        worst = float(np.max(np.abs(sol.f)))
        if worst > 1e-8:
            raise AssertionError(f"|f| = {worst:.3g} for h = -1")
        return f"flat background |f| = {worst:.2g}"

    def check_uniqueness():
        pipe = get_pipe()
        rng = np.random.default_rng(cfg.seed)
        sol_a = solve_liouville(pipe.problem,
                                init=0.5 * rng.standard_normal(pipe.mesh.num_vertices))
        dist = h1_norm(pipe.ops, sol_a.f - pipe.f)
        if dist > 1e-6:
            raise AssertionError(f"two inits differ by {dist:.3g} in H^1")
        return f"random init agrees to {dist:.2g}"

    def check_hermitian():
        pipe = get_small()
        A = pipe.dirac.A1
        diff = A - A.conj().T
        worst = float(np.abs(diff.data).max()) if diff.nnz else 0.0
        if worst != 0.0:
            raise AssertionError(f"stored pairing deviates from A^H by {worst:.3g}")
        return (f"A = A^H exactly "
                f"(vertex-rule defect before symmetrizing {pipe.dirac.herm_defect:.2g})")

    def check_pairing():
        pipe = get_small()
        rng = np.random.default_rng(cfg.seed)
        nc = pipe.dirac.num_constrained
        worst = 0.0
        for _ in range(20):
            za = rng.standard_normal(nc) + 1j * rng.standard_normal(nc)
            zb = rng.standard_normal(nc) + 1j * rng.standard_normal(nc)
            pa = (pipe.dirac.P @ za).reshape(-1, 2)
            pb = (pipe.dirac.P @ zb).reshape(-1, 2)
            worst = max(worst, abs(boundary_pairing(pipe.dirac, pa, pb)))
        if worst > 1e-10:
            raise AssertionError(f"boundary pairing {worst:.3g}")
        return f"max |pairing| = {worst:.2g} over 20 pairs"

    def check_orthonormality():
        basis = get_small().basis
        X, Bd = basis.vectors, basis.Bd
        W = X.conj().T @ (Bd[:, None] * X)
        defect = float(np.max(np.abs(W - np.eye(W.shape[0]))))
        if defect > 1e-8:
            raise AssertionError(f"orthonormality defect {defect:.3g}")
        return f"weighted Gram defect {defect:.2g}"

    def check_shift_law():
        pipe = get_small()
        shift = 0.37
        shifted = solve_weighted_spectrum(pipe.dirac, pipe.f + shift)
        rel = np.max(np.abs(shifted.eigenvalues
                            - np.exp(-shift) * pipe.basis.eigenvalues)
                     / np.maximum(np.abs(pipe.basis.eigenvalues), 1e-12))
        if rel > 1e-8:
            raise AssertionError(f"shift law violated at {rel:.3g}")
        return f"constant-shift relative error {rel:.2g}"

    def check_gradient():
        pipe = get_small()
        ctx = VariationalContext(pipe.problem, pipe.basis)
        rng = np.random.default_rng(cfg.seed)
        rho = 0.5 * pipe.basis.eigenvalue(1)
        V = pipe.mesh.num_vertices
        worst = 0.0
        for _ in range(3):
            u = pipe.f + 0.1 * rng.standard_normal(V)
            psi = ctx.ambient(ctx.from_spectral(
                0.3 * (rng.standard_normal(len(pipe.basis.eigenvalues))
                       + 1j * rng.standard_normal(len(pipe.basis.eigenvalues)))))
            state = CoupledState(u=u, psi=psi, rho=rho)
            grads = grad_energy(state, pipe.basis, pipe.problem)
            v = rng.standard_normal(V)
            dpsi_c = ctx.constrained_coeffs(ctx.ambient(
                rng.standard_normal(pipe.dirac.num_constrained)
                + 1j * rng.standard_normal(pipe.dirac.num_constrained)))
            eps = 1e-5
            # pair in spectral coordinates, where dE = du.v + 2 Re <e, da>;
            # the constrained coordinates carry the lumped weight instead
            e = ctx.spectral_coeffs(dpsi_c)
            da = ctx.spectral_coeffs(ctx.constrained_coeffs(grads.dpsi))
            analytic = float(grads.du @ v) + 2 * float(np.real(np.vdot(e, da)))

            def E(t):
                st = CoupledState(
                    u=u + t * v,
                    psi=psi + t * ctx.ambient(dpsi_c), rho=rho)
                a = ctx.spectral_coeffs(ctx.constrained_coeffs(st.psi))
                return energy_coeffs(ctx, st.u, a, rho).total

            fd = (E(eps) - E(-eps)) / (2 * eps)
            worst = max(worst, abs(fd - analytic) / max(abs(fd), 1e-12))
        if worst > 1e-6:
            raise AssertionError(f"gradient mismatch {worst:.3g}")
        return f"max relative gradient error {worst:.2g}"

    def check_single_mode():
        pipe = get_small()
        ctx = VariationalContext(pipe.problem, pipe.basis)
        lam1 = pipe.basis.eigenvalue(1)
        rho = 0.45 * lam1
        I_f = scalar_energy(pipe.ops, pipe.h, pipe.lam, pipe.f)
        s = 0.7
        a = np.zeros(len(pipe.basis.eigenvalues), dtype=complex)
        a[pipe.basis.num_negative] = s
        E = energy_coeffs(ctx, pipe.f, a, rho).total
        err = abs(E - I_f - 2 * s * s * (lam1 - rho))
        if err > 1e-10:
            raise AssertionError(f"single-mode law violated at {err:.3g}")
        return f"single-mode energy law error {err:.2g}"

    def check_projection():
        pipe = get_small()
        ctx = VariationalContext(pipe.problem, pipe.basis)
        rng = np.random.default_rng(cfg.seed)
        rho = 0.5 * pipe.basis.eigenvalue(1)
        npos = pipe.basis.num_positive
        ap = rng.standard_normal(npos) + 1j * rng.standard_normal(npos)
        ap *= 0.5 / np.linalg.norm(ap)
        u = pipe.f + 0.2 * rng.standard_normal(pipe.mesh.num_vertices)
        from .nehari import constraint_values

        a = project_to_nehari_coeffs(ctx, u, ap, rho)
        sup = float(np.max(np.abs(
            constraint_values(ctx, u, a, rho)[:pipe.basis.num_negative])))
        if sup > 1e-9:
            raise AssertionError(f"projection residual {sup:.3g}")
        return f"projection residual {sup:.2g}"

    return [
        ("coefficients_nonpositive", False, check_coefficients),
        ("euler_characteristic_negative", False, check_chi),
        ("gauss_bonnet_defect", True, check_gauss_bonnet),
        ("liouville_flat_exactness", False, check_liouville_exact),
        ("liouville_uniqueness", False, check_uniqueness),
        ("dirac_hermitian", False, check_hermitian),
        ("chirality_boundary_pairing", False, check_pairing),
        ("weighted_orthonormality", False, check_orthonormality),
        ("spectrum_shift_law", False, check_shift_law),
        ("energy_gradient", False, check_gradient),
        ("single_mode_energy_law", False, check_single_mode),
        ("nehari_projection", False, check_projection),
    ]


def cmd_verify(cfg: RunConfig, args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    failed = False
    for name, gated, fn in _verify_checks(cfg):
        if gated and args.coarse:
            results.append({"name": name, "status": "skipped",
                            "detail": "convergence-gated check skipped on coarse mesh"})
            continue
        try:
            detail = fn()
            results.append({"name": name, "status": "pass", "detail": detail})
        except (AssertionError, InputError, SolverError, MeshError) as exc:
            results.append({"name": name, "status": "fail", "detail": str(exc)})
            failed = True
    payload = {"passed": not failed, "checks": results}
    write_manifest(out / "verify.json", payload)
    width = max(len(r["name"]) for r in results)
    for r in results:
        print(f"{r['name']:<{width}}  {r['status']:>7}  {r['detail']}")
    print(f"{'all checks passed' if not failed else 'FAILURES detected'} "
          f"-> {out / 'verify.json'}")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="run configuration file (defaults built in)")
    common.add_argument("--out", type=str, default="out",
                        help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the [numerics] seed")
    common.add_argument("--tol", type=float, default=None,
                        help="override the [numerics] tolerance")

    parser = argparse.ArgumentParser(
        prog="superliouville",
        description="Discretized super-Liouville boundary value problems "
                    "on multiply connected planar domains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", parents=[common],
                       help="build the mesh and report the Gauss-Bonnet defect")
    p.add_argument("--refine", action="store_true",
                   help="also build the half-spacing mesh and report the defect ratio")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("liouville", parents=[common],
                       help="solve the scalar background problem")
    p.set_defaults(func=cmd_liouville)

    p = sub.add_parser("spectrum", parents=[common],
                       help="compute the weighted Dirac spectrum")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("solve", parents=[common],
                       help="run the full coupled saddle-point pipeline")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common],
                       help="run solve over the configured rho list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common],
                       help="run the property-check suite")
    p.add_argument("--coarse", action="store_true",
                   help="skip convergence-gated checks")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", parents=[common],
                       help="re-render figures from an existing run directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = apply_overrides(cfg, seed=args.seed, tol=args.tol)
        return args.func(cfg, args)
    except ResonanceError as exc:
        print(f"error: resonant rho: {exc}", file=sys.stderr)
        return 2
    except (InputError, MeshError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, AssemblyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
