import numpy as np
import pytest

from superliouville import (
    InputError,
    LiouvilleProblem,
    SolverError,
    build_disk,
    h1_norm,
    normalize_metric,
    solve_liouville,
)
from superliouville.liouville import (
    scalar_energy,
    scalar_residual,
    weak_residual,
)


def test_normalized_area_matches_euler_characteristic(pants):
    # summing the discrete curvature equation over all vertices kills the
    # stiffness term, leaving area = -2*pi*chi
    assert pants["ops"].lumped_g.sum() == pytest.approx(2 * np.pi, abs=1e-9)


def test_normalize_rejects_positive_chi():
    # a plain disk has chi = 1 > 0; no curvature -1 metric exists
    mesh = build_disk(target_h=0.25)
    with np.errstate(over="ignore"), pytest.raises(SolverError):
        normalize_metric(mesh, np.zeros(mesh.num_vertices))


def test_normalize_independent_of_seed_factor(pants):
    mesh = pants["mesh"]
    rng = np.random.default_rng(0)
    alt = normalize_metric(mesh, 0.5 * rng.standard_normal(mesh.num_vertices))
    assert np.max(np.abs(alt - pants["phi"])) < 1e-8


def test_standard_background_is_exactly_flat(pants):
    # h = -1, lam = 0 in the normalized metric is solved by u = 0, and
    # the closed-form constant start lands on it immediately
    sol = pants["sol"]
    assert sol.iterations == 0
    assert np.max(np.abs(sol.f)) < 1e-13
    assert sol.energy == pytest.approx(2 * np.pi, rel=1e-12)
    assert sol.hessian_pd
    assert sol.c0 == pytest.approx(1.0, abs=1e-12)


def test_constant_coefficient_shifts_solution(pants):
    # h = -e^{2c} is solved by u = -c
    ops = pants["ops"]
    V = ops.mesh.num_vertices
    c = 0.7
    problem = LiouvilleProblem(ops, np.full(V, -np.exp(2 * c)), np.zeros(V))
    sol = solve_liouville(problem)
    assert np.max(np.abs(sol.f + c)) < 1e-12


def test_unique_minimizer_from_any_start(pants):
    problem = pants["problem"]
    rng = np.random.default_rng(31)
    V = problem.ops.mesh.num_vertices
    for _ in range(2):
        sol = solve_liouville(problem, init=rng.standard_normal(V))
        assert h1_norm(problem.ops, sol.f - pants["sol"].f) < 1e-8


def test_robin_boundary_term(pants):
    ops = pants["ops"]
    V = ops.mesh.num_vertices
    problem = LiouvilleProblem(ops, np.full(V, -1.0), np.full(V, -0.5))
    sol = solve_liouville(problem)
    R = scalar_residual(ops, problem.h, problem.lam, sol.f)
    assert np.max(np.abs(R)) < 1e-10
    assert weak_residual(problem, sol.f) < 1e-9
    # the boundary sink pushes the factor below the lam = 0 solution
    assert np.mean(sol.f) < 0.0


def test_variable_coefficients_converge(pants):
    ops = pants["ops"]
    x = ops.mesh.vertices[:, 0]
    h = -1.0 - 0.5 * np.exp(-(x**2) / 0.18)
    problem = LiouvilleProblem(ops, h, np.zeros_like(h))
    sol = solve_liouville(problem)
    assert sol.residual_norm <= 1e-10
    assert sol.hessian_pd
    assert sol.c0 > 0


def test_energy_decreases_to_minimum(pants):
    ops, problem = pants["ops"], pants["problem"]
    rng = np.random.default_rng(4)
    u0 = rng.standard_normal(ops.mesh.num_vertices)
    start = scalar_energy(ops, problem.h, problem.lam, u0)
    sol = solve_liouville(problem, init=u0)
    assert sol.energy < start


def test_positive_h_rejected(pants):
    ops = pants["ops"]
    V = ops.mesh.num_vertices
    h = np.full(V, -1.0)
    h[5] = 0.3
    with pytest.raises(InputError):
        LiouvilleProblem(ops, h, np.zeros(V))


def test_positive_boundary_lam_rejected(pants):
    ops = pants["ops"]
    V = ops.mesh.num_vertices
    lam = np.zeros(V)
    lam[ops.mesh.boundary_vertices()[0]] = 0.1
    with pytest.raises(InputError):
        LiouvilleProblem(ops, np.full(V, -1.0), lam)


def test_identically_zero_data_rejected(pants):
    ops = pants["ops"]
    V = ops.mesh.num_vertices
    with pytest.raises(InputError):
        LiouvilleProblem(ops, np.zeros(V), np.zeros(V))


def test_wrong_init_length_rejected(pants):
    with pytest.raises(InputError):
        solve_liouville(pants["problem"], init=np.zeros(3))


def test_iteration_budget_enforced(pants):
    with pytest.raises(SolverError):
        solve_liouville(
            pants["problem"],
            init=np.full(pants["mesh"].num_vertices, 5.0),
            max_iters=1,
        )
