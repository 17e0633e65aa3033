import numpy as np
import pytest

from superliouville import (
    build_disk,
    gauss_bonnet_defect,
    gaussian_curvature,
    geodesic_curvature,
    reference_conformal_factor,
    turning_angles,
)
from superliouville.curvature import boundary_lumped_lengths


def interior_of(mesh):
    return np.setdiff1d(np.arange(mesh.num_vertices), mesh.boundary_vertices())


def test_flat_disk_gauss_bonnet_near_exact():
    # with phi = 0 the deficit comes only from polygonal turning angles,
    # which telescope exactly; only roundoff remains
    mesh = build_disk(target_h=0.25)
    defect = gauss_bonnet_defect(mesh, np.zeros(mesh.num_vertices))
    assert abs(defect) < 1e-12


def test_flat_pants_gauss_bonnet_near_exact(pants):
    mesh = pants["mesh"]
    defect = gauss_bonnet_defect(mesh, np.zeros(mesh.num_vertices))
    assert abs(defect) < 1e-12


def test_gaussian_curvature_flat_zero(pants):
    mesh = pants["mesh"]
    K = gaussian_curvature(mesh, np.zeros(mesh.num_vertices))
    assert np.max(np.abs(K[interior_of(mesh)])) < 1e-10


def test_gaussian_curvature_harmonic_factor_zero(pants):
    # phi = x - y is piecewise linear on the mesh and harmonic, so the
    # recovered curvature vanishes to roundoff
    mesh = pants["mesh"]
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    K = gaussian_curvature(mesh, x - y)
    assert np.max(np.abs(K[interior_of(mesh)])) < 1e-10


def test_gaussian_curvature_quadratic_factor():
    # phi = (x^2 + y^2)/2 has Delta phi = 2, so K = -2 e^{-2 phi}; the
    # recovery is clean in the bulk but noisy in the one-ring layer next
    # to the boundary, hence percentile bounds rather than a max bound
    mesh = build_disk(target_h=0.08)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    phi = 0.5 * (x * x + y * y)
    K = gaussian_curvature(mesh, phi)
    expected = -2.0 * np.exp(-2.0 * phi)
    errs = np.sort(np.abs((K - expected)[interior_of(mesh)]))
    assert np.median(errs) < 1e-4
    assert errs[int(0.9 * len(errs)) - 1] < 0.05


def test_reference_factor_curvature():
    # the reference factor has Delta phi = 0.4 everywhere
    mesh = build_disk(target_h=0.08)
    phi = reference_conformal_factor(mesh)
    K = gaussian_curvature(mesh, phi)
    expected = -0.4 * np.exp(-2.0 * phi)
    errs = np.sort(np.abs((K - expected)[interior_of(mesh)]))
    assert np.median(errs) < 1e-4
    assert errs[int(0.9 * len(errs)) - 1] < 0.05


def test_normalized_metric_curvature_minus_one(pants):
    # normalize_metric drives the same discrete curvature operator that
    # gaussian_curvature evaluates, so interior recovery is exact
    mesh, phi = pants["mesh"], pants["phi"]
    K = gaussian_curvature(mesh, phi)
    assert np.max(np.abs(K[interior_of(mesh)] + 1.0)) < 1e-10


def test_turning_angles_sum_flat_disk():
    mesh = build_disk(target_h=0.25)
    total = sum(float(np.sum(t)) for t in turning_angles(mesh))
    assert total == pytest.approx(2 * np.pi, abs=1e-12)


def test_turning_angles_sum_pants(pants):
    total = sum(float(np.sum(t)) for t in turning_angles(pants["mesh"]))
    assert total == pytest.approx(-2 * np.pi, abs=1e-12)


def test_geodesic_curvature_flat_circle():
    # flat unit circle: kg = 1 pointwise up to the chord correction, and
    # the total closes to 2*pi exactly (telescoping turning angles)
    mesh = build_disk(target_h=0.1)
    phi = np.zeros(mesh.num_vertices)
    kg = geodesic_curvature(mesh, phi, 0)
    ell = boundary_lumped_lengths(mesh)[0]
    assert float(np.sum(kg * ell)) == pytest.approx(2 * np.pi, abs=1e-12)
    assert np.max(np.abs(kg - 1.0)) < 0.01


def test_geodesic_curvature_unknown_loop(pants):
    with pytest.raises(KeyError):
        geodesic_curvature(pants["mesh"], pants["phi"], 5)


def test_gauss_bonnet_defect_shrinks_with_mesh():
    defects = []
    for th in (0.2, 0.1):
        mesh = build_disk(target_h=th)
        defects.append(abs(gauss_bonnet_defect(mesh, reference_conformal_factor(mesh))))
    assert defects[1] < 0.6 * defects[0]
