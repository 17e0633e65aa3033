import numpy as np
import pytest

from superliouville import (
    LiouvilleProblem,
    assemble_dirac,
    assemble_operators,
    build_disk_with_holes,
    normalize_metric,
    solve_liouville,
    solve_weighted_spectrum,
)

HOLES = [(-0.4, 0.0, 0.15), (0.4, 0.0, 0.15)]

# fixed dictionary of smooth test functions; several suites draw random
# combinations of these so the "same" continuum field is reproducible on
# every mesh
SMOOTH_FUNCS = (
    lambda x, y: np.ones_like(x),
    lambda x, y: x,
    lambda x, y: y,
    lambda x, y: x * x - y * y,
    lambda x, y: x * y,
    lambda x, y: np.cos(np.pi * x),
    lambda x, y: np.sin(np.pi * y),
    lambda x, y: np.cos(2 * np.pi * x) * np.sin(np.pi * y),
)


def smooth_field(mesh, coeffs):
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return sum(c * fn(x, y) for c, fn in zip(coeffs, SMOOTH_FUNCS))


def smooth_spinor(mesh, coeffs):
    """(V, 2) complex field from a (2, len(SMOOTH_FUNCS)) coefficient block."""
    return np.stack(
        [smooth_field(mesh, coeffs[0]), smooth_field(mesh, coeffs[1])], axis=1
    )


def build_pipeline(target_h, h_fn=None, lam_fn=None, seed=0):
    """Normalized pair-of-pants pipeline shared by the suites."""
    mesh = build_disk_with_holes(1.0, HOLES, target_h=target_h, seed=seed)
    V = mesh.num_vertices
    phi = normalize_metric(mesh, np.zeros(V))
    ops = assemble_operators(mesh, phi)
    h = np.full(V, -1.0) if h_fn is None else h_fn(mesh)
    lam = np.zeros(V) if lam_fn is None else lam_fn(mesh)
    problem = LiouvilleProblem(ops, h, lam)
    sol = solve_liouville(problem)
    return {
        "mesh": mesh,
        "phi": phi,
        "ops": ops,
        "problem": problem,
        "sol": sol,
    }


def add_spectrum(pipe):
    pipe["dirac"] = assemble_dirac(pipe["mesh"], pipe["phi"], sign=+1)
    pipe["basis"] = solve_weighted_spectrum(pipe["dirac"], pipe["sol"].f)
    return pipe


@pytest.fixture(scope="session")
def pants():
    """Coarse reference pipeline with the complete spectral basis."""
    return add_spectrum(build_pipeline(0.14))


@pytest.fixture(scope="session")
def pants_mid():
    """Second, finer mesh for cross-mesh stability checks."""
    return add_spectrum(build_pipeline(0.10))
