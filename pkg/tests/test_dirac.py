import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import jv

from superliouville import (
    assemble_dirac,
    boundary_pairing,
    build_disk,
    conformal_push,
    dirac_apply,
    solve_weighted_spectrum,
)
from superliouville.clifford import unflatten_spinor


def disk_dirac_magnitudes(count=8):
    """Unit-disk chirality eigenvalue magnitudes from Bessel crossings.

    Separating variables in polar coordinates reduces the flat problem
    to radial Bessel systems; the boundary condition picks out the
    magnitudes where J_m(r) = J_{m+1}(r) (one sign of the angular mode)
    or J_m(r) = -J_{m+1}(r) (the other sign).
    """
    roots = []
    grid = np.linspace(1e-3, 9.0, 2000)
    for m in range(8):
        for s in (+1.0, -1.0):
            vals = jv(m, grid) - s * jv(m + 1, grid)
            idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
            for i in idx:
                r = brentq(
                    lambda t: jv(m, t) - s * jv(m + 1, t), grid[i], grid[i + 1]
                )
                roots.append(r)
    return np.sort(np.array(roots))[:count]


@pytest.fixture(scope="module")
def disk_pipe():
    mesh = build_disk(target_h=0.1)
    V = mesh.num_vertices
    D = assemble_dirac(mesh, np.zeros(V), sign=+1)
    basis = solve_weighted_spectrum(D, np.zeros(V))
    return mesh, D, basis


def test_disk_spectrum_matches_bessel_crossings(disk_pipe):
    _, _, basis = disk_pipe
    exact = disk_dirac_magnitudes(8)
    positive = basis.eigenvalues[basis.eigenvalues > 0][:8]
    rel = np.abs(positive - exact) / exact
    # per-mode bounds: twice the measured defect of this discretization
    # at this resolution, growing with mode number as the oscillation
    # outpaces the mesh
    bounds = np.array([5e-4, 5e-3, 6e-3, 1e-2, 1.5e-2, 1.4e-2, 1.7e-2, 2.5e-2])
    assert np.all(rel < bounds), f"rel errors {rel}"


def test_disk_spectrum_kernel_free(disk_pipe):
    _, _, basis = disk_pipe
    assert basis.kernel_dimension == 0
    assert np.min(np.abs(basis.eigenvalues)) > 1.0


def test_operator_exactly_hermitian(pants):
    A = pants["dirac"].A1
    diff = A - A.conj().T
    worst = float(np.abs(diff.data).max()) if diff.nnz else 0.0
    assert worst == 0.0


def test_symmetrization_defect_small(pants):
    # the vertex-rule pairing is only approximately symmetric before the
    # explicit half-sum; the recorded defect bounds that approximation
    D = pants["dirac"]
    assert 0.0 < D.herm_defect < 0.5


def test_boundary_pairing_vanishes_on_constrained(pants):
    # the chirality condition makes the boundary Clifford pairing vanish
    # identically, which is what renders the operator symmetric
    D = pants["dirac"]
    rng = np.random.default_rng(0)
    nc = D.num_constrained
    worst = 0.0
    for _ in range(20):
        a = rng.standard_normal(nc) + 1j * rng.standard_normal(nc)
        b = rng.standard_normal(nc) + 1j * rng.standard_normal(nc)
        psi = unflatten_spinor(D.P @ a)
        chi = unflatten_spinor(D.P @ b)
        worst = max(worst, abs(boundary_pairing(D, psi, chi)))
    assert worst < 1e-10


def test_boundary_pairing_detects_unconstrained(pants):
    # random ambient spinors with no boundary condition do pair
    D = pants["dirac"]
    rng = np.random.default_rng(1)
    V = pants["mesh"].num_vertices
    psi = rng.standard_normal((V, 2)) + 1j * rng.standard_normal((V, 2))
    chi = rng.standard_normal((V, 2)) + 1j * rng.standard_normal((V, 2))
    assert abs(boundary_pairing(D, psi, chi)) > 1e-3


def test_constrained_mass_positive(pants):
    D = pants["dirac"]
    f = pants["sol"].f
    mass = D.constrained_mass(f)
    assert mass.shape == (D.num_constrained,)
    assert np.all(mass > 0)


def test_dirac_apply_linear(pants):
    D = pants["dirac"]
    V = pants["mesh"].num_vertices
    rng = np.random.default_rng(2)
    psi = rng.standard_normal((V, 2)) + 1j * rng.standard_normal((V, 2))
    chi = rng.standard_normal((V, 2)) + 1j * rng.standard_normal((V, 2))
    lhs = dirac_apply(D, 2.0 * psi + 1j * chi)
    rhs = 2.0 * dirac_apply(D, psi) + 1j * dirac_apply(D, chi)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_conformal_push_scales_pointwise(pants):
    V = pants["mesh"].num_vertices
    rng = np.random.default_rng(3)
    psi = rng.standard_normal((V, 2)) + 1j * rng.standard_normal((V, 2))
    dphi = rng.standard_normal(V)
    pushed = conformal_push(psi, dphi)
    np.testing.assert_allclose(pushed, np.exp(-0.5 * dphi)[:, None] * psi, atol=1e-14)


def test_opposite_chirality_same_magnitudes(pants):
    # flipping the boundary-condition sign preserves the magnitude
    # spectrum at this symmetric geometry only approximately; but both
    # signs must produce kernel-free symmetric operators
    mesh, phi, f = pants["mesh"], pants["phi"], pants["sol"].f
    Dm = assemble_dirac(mesh, phi, sign=-1)
    diff = Dm.A1 - Dm.A1.conj().T
    worst = float(np.abs(diff.data).max()) if diff.nnz else 0.0
    assert worst == 0.0
    basis_m = solve_weighted_spectrum(Dm, f, count=4)
    assert np.min(np.abs(basis_m.eigenvalues)) > 0.5
