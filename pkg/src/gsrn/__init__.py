"""Markovian gauge-invariant symmetric random norms.

Builds random norms from occupation-time integrals of finite pure-birth
Markov chains, computes the distribution of the integral by three
independent engines, and tabulates expected-norm unit circles and spheres.
"""

__version__ = "0.1.0"

from .ctmc import (GeneratorMatrix, RewardFunction, Trajectory,
                   build_pure_birth, matrix_exponential_action,
                   sample_trajectory, transition_matrix)
from .norm_process import (GsrnSample, NormPath, evaluate_norm,
                           from_trajectory, hitting_time_integral,
                           path_integral, validate_norm_axioms)
from .distribution import (CharFnEvaluator, DistributionGrid,
                           characteristic_function, check_remark_bounds,
                           mean_via_generator, monte_carlo_cdf,
                           monte_carlo_grid, solve_integral_equation,
                           solve_upwind)
from .expected_norm import (ExpectedNormTable, SortedVector, expected_norm_2d,
                            norm_cdf, strong_extension_sample, unit_circle,
                            unit_sphere_3d, weak_extension)

__all__ = [
    "GeneratorMatrix", "RewardFunction", "Trajectory", "build_pure_birth",
    "matrix_exponential_action", "sample_trajectory", "transition_matrix",
    "GsrnSample", "NormPath", "evaluate_norm", "from_trajectory",
    "hitting_time_integral", "path_integral", "validate_norm_axioms",
    "CharFnEvaluator", "DistributionGrid", "characteristic_function",
    "check_remark_bounds", "mean_via_generator", "monte_carlo_cdf",
    "monte_carlo_grid", "solve_integral_equation", "solve_upwind",
    "ExpectedNormTable", "SortedVector", "expected_norm_2d", "norm_cdf",
    "strong_extension_sample", "unit_circle", "unit_sphere_3d",
    "weak_extension",
]
