"""kkred: numerical laboratory for toy space-times with variable compactification radii.

Builds the induced geometry of torus-fibred spaces whose circle radii depend on
the non-compact coordinate, transforms the separated Klein-Gordon mode equation
to a one-dimensional Schroedinger-like problem, and solves the resulting bound
and scattering problems, cross-checking every closed form against independent
brute-force oracles.
"""

from .errors import (
    ConfigError,
    DegenerateGeometryError,
    KkredError,
    SolverError,
    ValidationError,
)
from .profiles import RadiusProfile, eval_profile, parse_profile, render_profile, validate_positivity
from .geometry import (
    CurvatureReport,
    Geometry,
    MetricSample,
    Tetrad,
    curvature_oracle,
    embed_point,
    induced_metric_oracle,
    induced_pullback,
    scalar_curvature_closed_3d,
    scalar_curvature_u,
    spacetime_metric,
    spatial_metric,
    tetrad,
)
from .coordinates import UMap, build_u_map, u_of_z, varrho, varrho_evaluators, z_of_u
from .reduction import (
    ModeSpec,
    PotentialTable,
    conformal_potential,
    conformal_weight,
    potential,
    tabulate_potential,
    threshold,
    z_equation_coeffs,
)
from .solver import (
    GridFunction,
    ScatterResult,
    SpectrumResult,
    bound_mode_wavefunction,
    bound_modes,
    fd_eigen_oracle,
    numerov_integrate,
    potential_table_builder,
    solve_z_equation,
    transfer_matrix_transmission,
    transmission,
    transplant_difference,
)

__version__ = "0.1.0"
