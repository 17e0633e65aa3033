import numpy as np
import pytest

from superliouville import assemble_operators, h1_norm, mt_inequality_gap
from superliouville.fem import (
    boundary_integrate_g,
    dirichlet_energy,
    integrate_g,
    load_field_csv,
    log_boundary_integral_exp,
    log_integral_exp,
    save_field_csv,
)
from superliouville.mesh import build_square_patch

from conftest import smooth_field


@pytest.fixture(scope="module")
def square():
    mesh = build_square_patch(n=16)
    return mesh, assemble_operators(mesh, np.zeros(mesh.num_vertices))


def test_flat_area_exact(square):
    mesh, ops = square
    assert ops.area_g == pytest.approx(1.0, abs=1e-14)
    assert float(ops.mass_g.sum()) == pytest.approx(1.0, abs=1e-13)


def test_flat_boundary_length_exact(square):
    _, ops = square
    assert ops.boundary_length_g == pytest.approx(4.0, abs=1e-13)


def test_dirichlet_energy_linear_exact(square):
    # grad(2x - 3y) = (2, -3), so the energy over the unit square is 13
    mesh, ops = square
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    assert dirichlet_energy(ops, 2 * x - 3 * y) == pytest.approx(13.0, abs=1e-12)


def test_dirichlet_energy_conformally_invariant(pants):
    # the same flat stiffness serves every conformal factor in 2-D
    mesh = pants["mesh"]
    rng = np.random.default_rng(5)
    u = smooth_field(mesh, rng.standard_normal(8))
    ops0 = assemble_operators(mesh, np.zeros(mesh.num_vertices))
    assert dirichlet_energy(pants["ops"], u) == pytest.approx(
        dirichlet_energy(ops0, u), rel=1e-14
    )


def test_consistent_mass_integrates_quadratics(square):
    # P1-interpolated weight e^{2*0} = 1: the consistent mass integrates
    # products of linears exactly; int_0^1 int_0^1 x*y = 1/4
    mesh, ops = square
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    assert float(x @ (ops.mass_g @ y)) == pytest.approx(0.25, abs=1e-13)
    assert float(x @ (ops.mass_g @ x)) == pytest.approx(1.0 / 3.0, abs=1e-13)


def test_weighted_mass_interpolated_weight(square):
    # with phi = x the mass carries weight e^{2x} interpolated in P1, so
    # integrating 1*1 against it equals the P1 interpolant's integral,
    # not the smooth integral; check against the trapezoid-type value
    mesh = build_square_patch(n=64)
    x = mesh.vertices[:, 0]
    ops = assemble_operators(mesh, x)
    exact = (np.exp(2.0) - 1.0) / 2.0
    ones = np.ones(mesh.num_vertices)
    assert float(ones @ (ops.mass_g @ ones)) == pytest.approx(exact, rel=1e-3)


def test_lumped_vs_consistent_agree_on_constants(pants):
    ops = pants["ops"]
    ones = np.ones(ops.mesh.num_vertices)
    assert integrate_g(ops, ones) == pytest.approx(
        float(ones @ (ops.mass_g @ ones)), rel=1e-12
    )


def test_boundary_integrate_splits_by_loop(pants):
    ops = pants["ops"]
    ones = np.ones(ops.mesh.num_vertices)
    total = boundary_integrate_g(ops, ones)
    per_loop = sum(
        boundary_integrate_g(ops, ones, loop_id=k) for k in range(ops.mesh.num_loops)
    )
    assert total == pytest.approx(per_loop, rel=1e-14)


def test_h1_norm_positive_definite(pants):
    ops = pants["ops"]
    rng = np.random.default_rng(11)
    for _ in range(5):
        u = rng.standard_normal(ops.mesh.num_vertices)
        assert h1_norm(ops, u) > 0
    assert h1_norm(ops, np.zeros(ops.mesh.num_vertices)) == 0.0


def test_log_integral_exp_overflow_guard(pants):
    ops = pants["ops"]
    u = np.full(ops.mesh.num_vertices, 500.0)
    val = log_integral_exp(ops, u)
    assert np.isfinite(val)
    assert val == pytest.approx(500.0 + np.log(ops.area_g), abs=1e-12)
    bval = log_boundary_integral_exp(ops, u)
    assert bval == pytest.approx(500.0 + np.log(ops.boundary_length_g), abs=1e-12)


def test_mt_gap_shift_invariant(pants):
    ops = pants["ops"]
    rng = np.random.default_rng(3)
    u = smooth_field(ops.mesh, rng.standard_normal(8))
    for mode in ("interior", "boundary"):
        base = mt_inequality_gap(ops, u, mode=mode)
        shifted = mt_inequality_gap(ops, u + 17.3, mode=mode)
        assert shifted == pytest.approx(base, abs=1e-9)


def test_mt_gap_rejects_unknown_mode(pants):
    with pytest.raises(ValueError):
        mt_inequality_gap(pants["ops"], np.zeros(pants["mesh"].num_vertices), mode="x")


def test_field_shape_checked(pants):
    with pytest.raises(ValueError):
        integrate_g(pants["ops"], np.zeros(3))


def test_nonfinite_phi_rejected(pants):
    phi = np.zeros(pants["mesh"].num_vertices)
    phi[0] = np.nan
    with pytest.raises(ValueError):
        assemble_operators(pants["mesh"], phi)


def test_field_csv_roundtrip(tmp_path, pants):
    rng = np.random.default_rng(2)
    values = rng.standard_normal(pants["mesh"].num_vertices)
    path = tmp_path / "field.csv"
    save_field_csv(path, values)
    back = load_field_csv(path)
    np.testing.assert_array_equal(back, values)
