"""Optimal designs and estimators for comparing two regression curves
observed with dependent Gaussian errors.

The package computes sampling time points and linear-unbiased-estimator
weights that minimize the width of the simultaneous confidence band for
the difference between two estimated regression curves, covers the
whole family of triangular covariance kernels through a Brownian time
change, and validates the resulting inference by simulation.
"""

from .models import (
    BasisFunction,
    BrownianReduction,
    DesignError,
    DesignPair,
    GroupDesign,
    Interval,
    KernelError,
    RegressionModel,
    TransformedBasis,
    TriangularKernel,
    brownian_kernel,
    exponential_kernel,
    from_brownian_design,
    kernel_preset,
    model_preset,
    parse_model,
    to_brownian,
)
from .numerics import (
    NotPositiveDefiniteError,
    QuadratureError,
    SingularMatrixError,
    cholesky,
    integrate_outer,
    integrate_scalar,
    invert,
    smallest_eigenvalue,
)
from .estimator import (
    EstimatorSpec,
    WeightSet,
    apply_estimator,
    check_unbiasedness,
    continuous_information,
    derivative_gram,
    estimator_spec,
    estimator_variance,
    increment_gram,
    optimal_weights,
    random_unbiased_weights,
    weighted_least_squares,
)
from .criterion import (
    ComparisonProblem,
    CriterionEvaluator,
    CriterionReport,
    GroupEngine,
    continuous_lower_bound_at,
    design_criterion,
    problem_engines,
    variance_difference_at,
    write_criterion_curve,
)
from .optimize import (
    DesignSearchResult,
    PsoConfig,
    PsoResult,
    optimize_design_pair,
    pso_minimize,
    uniform_design,
)
from .simulate import (
    BandError,
    BandResult,
    ExperimentSummary,
    SimulationPlan,
    bootstrap_band,
    coverage_experiment,
    sample_observations,
    write_band,
    write_summary,
)

__version__ = "0.1.0"

__all__ = [
    "BasisFunction",
    "RegressionModel",
    "TriangularKernel",
    "Interval",
    "GroupDesign",
    "DesignPair",
    "TransformedBasis",
    "BrownianReduction",
    "DesignError",
    "KernelError",
    "brownian_kernel",
    "exponential_kernel",
    "kernel_preset",
    "model_preset",
    "parse_model",
    "to_brownian",
    "from_brownian_design",
    "QuadratureError",
    "SingularMatrixError",
    "NotPositiveDefiniteError",
    "integrate_outer",
    "integrate_scalar",
    "invert",
    "cholesky",
    "smallest_eigenvalue",
    "WeightSet",
    "EstimatorSpec",
    "derivative_gram",
    "continuous_information",
    "increment_gram",
    "optimal_weights",
    "check_unbiasedness",
    "estimator_spec",
    "estimator_variance",
    "apply_estimator",
    "random_unbiased_weights",
    "weighted_least_squares",
    "ComparisonProblem",
    "CriterionReport",
    "CriterionEvaluator",
    "GroupEngine",
    "problem_engines",
    "variance_difference_at",
    "continuous_lower_bound_at",
    "design_criterion",
    "write_criterion_curve",
    "PsoConfig",
    "PsoResult",
    "DesignSearchResult",
    "pso_minimize",
    "uniform_design",
    "optimize_design_pair",
    "BandError",
    "SimulationPlan",
    "BandResult",
    "ExperimentSummary",
    "sample_observations",
    "bootstrap_band",
    "coverage_experiment",
    "write_band",
    "write_summary",
]
