"""Discretized super-Liouville boundary value problems on multiply
connected planar domains.

The pipeline: triangulate a disk with holes (Euler characteristic < 0),
normalize the background metric to curvature -1, solve the scalar
Liouville problem for the conformal background, compute the spectrum of
the e^f-weighted Dirac operator under chirality boundary conditions,
and hunt for saddle points of the coupled energy on the generalized
Nehari set by mountain-pass or linking searches.
"""

from .clifford import CliffordFrame, constraint_basis, default_frame
from .coeffs import Coefficient, parse_coefficient
from .config import RunConfig, load_config
from .curvature import (
    gauss_bonnet_defect,
    gaussian_curvature,
    geodesic_curvature,
    reference_conformal_factor,
    turning_angles,
)
from .dirac import (
    DiracOperator,
    assemble_dirac,
    boundary_pairing,
    conformal_push,
    dirac_apply,
)
from .energy import CoupledState, VariationalContext, energy, grad_energy
from .errors import InputError, ResonanceError, SolverError
from .fem import FemOperators, assemble_operators, h1_norm, mt_inequality_gap
from .liouville import (
    LiouvilleProblem,
    LiouvilleSolution,
    normalize_metric,
    solve_liouville,
)
from .mesh import (
    GeometryError,
    MeshError,
    TriMesh,
    build_disk,
    build_disk_with_holes,
    build_pair_of_pants,
    load_mesh,
    save_mesh,
)
from .nehari import (
    NehariResidual,
    fit_multipliers,
    multipliers,
    nehari_residual,
    project_to_nehari,
)
from .search import (
    LinkingConstants,
    PSDiagnostics,
    SearchResult,
    linking_constants,
    linking_search,
    mountain_pass_search,
    newton_refine,
    ps_diagnostics,
)
from .spectral import (
    SpectralBasis,
    frac_half_norm,
    load_basis,
    save_basis,
    solve_weighted_spectrum,
    split,
)

__version__ = "0.1.0"

__all__ = [
    "CliffordFrame",
    "Coefficient",
    "CoupledState",
    "DiracOperator",
    "FemOperators",
    "GeometryError",
    "InputError",
    "LinkingConstants",
    "LiouvilleProblem",
    "LiouvilleSolution",
    "MeshError",
    "NehariResidual",
    "PSDiagnostics",
    "ResonanceError",
    "RunConfig",
    "SearchResult",
    "SolverError",
    "SpectralBasis",
    "TriMesh",
    "VariationalContext",
    "assemble_dirac",
    "assemble_operators",
    "boundary_pairing",
    "build_disk",
    "build_disk_with_holes",
    "build_pair_of_pants",
    "conformal_push",
    "constraint_basis",
    "default_frame",
    "dirac_apply",
    "energy",
    "fit_multipliers",
    "frac_half_norm",
    "gauss_bonnet_defect",
    "reference_conformal_factor",
    "gaussian_curvature",
    "geodesic_curvature",
    "grad_energy",
    "h1_norm",
    "linking_constants",
    "linking_search",
    "load_basis",
    "load_config",
    "load_mesh",
    "mountain_pass_search",
    "mt_inequality_gap",
    "multipliers",
    "nehari_residual",
    "newton_refine",
    "normalize_metric",
    "parse_coefficient",
    "project_to_nehari",
    "ps_diagnostics",
    "save_basis",
    "save_mesh",
    "solve_liouville",
    "solve_weighted_spectrum",
    "split",
    "turning_angles",
]
