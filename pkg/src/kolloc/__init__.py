"""Meshfree kernel collocation for second-order elliptic Dirichlet problems.

Variational and weighted least-squares collocation with Matern kernels on the
box (-1, 1)^d, plus the empirical machinery around it: constructive Riemann
point selections, norm-equivalence and stability constants from Gram-matrix
eigenvalue pencils, and convergence-rate sweeps against benchmark problems.
"""

from .assembly import (
    WEIGHT_SCHEMES,
    CollocationSystem,
    assemble_system,
    build_weights,
    theta_default,
    trapezoid_weights_1d,
    weight_and_scale,
)
from .estimator import METHODS, CollocationSolver
from .experiments import (
    ConvergenceRecord,
    FDReference,
    RateFit,
    RunConfig,
    emit_outputs,
    fd_reference_pde4,
    fit_rate,
    fit_rates,
    relative_l2,
    run_convergence,
)
from .geometry import (
    MeshMetrics,
    PointSet,
    apply_transform,
    boundary_subset,
    closest_point_square,
    fill_distance,
    mesh_metrics,
    oversample_counts,
    resolve_transform,
    scattered_cloud_near_line,
    separation_distance,
    tensor_grid,
)
from .kernels import (
    KernelJet,
    MaternSpec,
    apply_elliptic,
    bessel_k,
    elliptic_matrix,
    jet_matrices,
    matern_eval,
    matern_jet,
    matern_matrix,
    radial_profile,
)
from .pde import (
    EllipticOperator,
    EllipticProblem,
    ExactSolution,
    make_problem,
    manufactured_source,
)
from .solver import LstsqResult, cond2, gen_eig_extremes, solve_lstsq
from .stability import (
    BoundReport,
    EquivalenceReport,
    FineQuadrature,
    RiemannSelection,
    boundary_riemann_points,
    check_bound,
    fine_quadrature,
    lower_riemann_points,
    norm_equiv_constants,
    stability_rayleigh,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # kernels
    "MaternSpec",
    "KernelJet",
    "bessel_k",
    "radial_profile",
    "matern_eval",
    "matern_matrix",
    "matern_jet",
    "jet_matrices",
    "apply_elliptic",
    "elliptic_matrix",
    # geometry
    "PointSet",
    "MeshMetrics",
    "tensor_grid",
    "resolve_transform",
    "apply_transform",
    "boundary_subset",
    "fill_distance",
    "separation_distance",
    "mesh_metrics",
    "oversample_counts",
    "closest_point_square",
    "scattered_cloud_near_line",
    # problems
    "EllipticOperator",
    "ExactSolution",
    "EllipticProblem",
    "make_problem",
    "manufactured_source",
    # assembly
    "WEIGHT_SCHEMES",
    "CollocationSystem",
    "theta_default",
    "assemble_system",
    "trapezoid_weights_1d",
    "build_weights",
    "weight_and_scale",
    # solver
    "LstsqResult",
    "solve_lstsq",
    "cond2",
    "gen_eig_extremes",
    # estimator
    "CollocationSolver",
    "METHODS",
    # stability
    "RiemannSelection",
    "BoundReport",
    "EquivalenceReport",
    "FineQuadrature",
    "lower_riemann_points",
    "boundary_riemann_points",
    "check_bound",
    "fine_quadrature",
    "norm_equiv_constants",
    "stability_rayleigh",
    # experiments
    "RunConfig",
    "ConvergenceRecord",
    "RateFit",
    "FDReference",
    "relative_l2",
    "fit_rate",
    "fit_rates",
    "run_convergence",
    "fd_reference_pde4",
    "emit_outputs",
]
