import numpy as np
import pytest

from superliouville import (
    GeometryError,
    build_disk,
    build_disk_with_holes,
    build_pair_of_pants,
    load_mesh,
    save_mesh,
)

from conftest import HOLES


def test_pair_of_pants_topology(pants):
    mesh = pants["mesh"]
    assert mesh.euler_characteristic == -1
    assert mesh.num_loops == 3
    # every boundary loop is closed and consistently oriented
    for loop in mesh.boundary_loops:
        assert len(loop) >= 3
        assert len(set(loop)) == len(loop)


def test_disk_topology():
    mesh = build_disk(target_h=0.3)
    assert mesh.euler_characteristic == 1
    assert mesh.num_loops == 1


def test_two_holes_drop_chi_by_two(pants):
    disk = build_disk(target_h=0.3)
    assert disk.euler_characteristic - pants["mesh"].euler_characteristic == 2


def test_triangles_positively_oriented(pants):
    v, t = pants["mesh"].vertices, pants["mesh"].triangles
    e1 = v[t[:, 1]] - v[t[:, 0]]
    e2 = v[t[:, 2]] - v[t[:, 0]]
    area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert np.all(area2 > 0)


def test_h_reports_max_edge(pants):
    mesh = pants["mesh"]
    v, t = mesh.vertices, mesh.triangles
    emax = 0.0
    for a, b in ((0, 1), (1, 2), (2, 0)):
        emax = max(emax, float(np.linalg.norm(v[t[:, a]] - v[t[:, b]], axis=1).max()))
    assert mesh.h == pytest.approx(emax)


def test_hole_overlap_rejected():
    with pytest.raises(GeometryError):
        build_disk_with_holes(1.0, [(-0.1, 0.0, 0.2), (0.1, 0.0, 0.2)], target_h=0.2)


def test_hole_outside_rejected():
    with pytest.raises(GeometryError):
        build_disk_with_holes(1.0, [(0.9, 0.0, 0.2)], target_h=0.2)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_nonpositive_sizes_rejected(bad):
    with pytest.raises(ValueError):
        build_disk_with_holes(bad, [], target_h=0.2)
    with pytest.raises(ValueError):
        build_disk_with_holes(1.0, [], target_h=bad)
    with pytest.raises(ValueError):
        build_disk_with_holes(1.0, [(0.0, 0.0, bad)], target_h=0.2)


def test_pants_builder_requires_two_holes():
    with pytest.raises(ValueError):
        build_pair_of_pants(1.0, [(0.0, 0.0)], [0.15], target_h=0.2)


def test_same_seed_same_mesh():
    a = build_disk_with_holes(1.0, HOLES, target_h=0.18, seed=7)
    b = build_disk_with_holes(1.0, HOLES, target_h=0.18, seed=7)
    np.testing.assert_array_equal(a.vertices, b.vertices)
    np.testing.assert_array_equal(a.triangles, b.triangles)


def test_different_seed_different_mesh():
    a = build_disk_with_holes(1.0, HOLES, target_h=0.18, seed=7)
    b = build_disk_with_holes(1.0, HOLES, target_h=0.18, seed=8)
    assert a.num_vertices != b.num_vertices or not np.array_equal(a.vertices, b.vertices)


def test_save_load_roundtrip(tmp_path, pants):
    path = tmp_path / "mesh.txt"
    save_mesh(pants["mesh"], path)
    back = load_mesh(path)
    np.testing.assert_array_equal(back.vertices, pants["mesh"].vertices)
    np.testing.assert_array_equal(back.triangles, pants["mesh"].triangles)
    assert back.num_loops == pants["mesh"].num_loops
    assert back.seed == pants["mesh"].seed


def test_boundary_vertices_lie_on_circles(pants):
    mesh = pants["mesh"]
    r = np.linalg.norm(mesh.vertices, axis=1)
    for loop in mesh.boundary_loops:
        radii = r[np.asarray(loop)]
        on_outer = np.allclose(radii, 1.0, atol=1e-9)
        centered = [
            np.allclose(
                np.linalg.norm(mesh.vertices[np.asarray(loop)] - np.array([cx, cy]), axis=1),
                rr,
                atol=1e-9,
            )
            for cx, cy, rr in HOLES
        ]
        assert on_outer or any(centered)
