"""Bootstrap tests for spherical and elliptical symmetry of multivariate
samples.

The statistic is a scaled Kolmogorov-Smirnov-type maximum, over random
direction pairs and a threshold grid, of the mean of tangential
projections restricted to half-spaces. Critical values come from a
spherically symmetric bootstrap (norms resampled, directions redrawn
uniformly); the elliptical variant standardizes the data first and
re-standardizes every bootstrap sample.

Entry points: :func:`test_spherical`, :func:`test_elliptical`,
:func:`ks_statistic`, :func:`sample_distribution`, and the ``symtest``
command-line tool.
"""

from .elliptical_test import EllipticalReport, bootstrap_stats_elliptical, test_elliptical
from .errors import (
    DimensionError,
    DomainError,
    EigenFailure,
    EmptyInput,
    ExperimentFailure,
    InvalidDimension,
    InvalidSpec,
    SingularCovariance,
    SymtestError,
)
from .linalg import empirical_cov, empirical_mean, inv_sqrt, standardize, sym_eigen
from .samplers import (
    DistributionSpec,
    RngStream,
    normal_quantile,
    resample_with_replacement,
    sample_distribution,
    sample_sphere,
    student_t_cdf,
)
from .simharness import (
    CSV_COLUMNS,
    ExperimentResult,
    ExperimentSpec,
    parse_suite_file,
    results_to_csv,
    run_experiment,
    run_suite,
)
from .spherical_test import (
    BootstrapConfig,
    TestReport,
    bootstrap_stats_spherical,
    empirical_quantile,
    test_spherical,
)
from .statistic import DirectionGrid, StatValue, eval_f, ks_statistic, ks_statistic_brute, make_grid

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig",
    "CSV_COLUMNS",
    "DimensionError",
    "DirectionGrid",
    "DistributionSpec",
    "DomainError",
    "EigenFailure",
    "EllipticalReport",
    "EmptyInput",
    "ExperimentFailure",
    "ExperimentResult",
    "ExperimentSpec",
    "InvalidDimension",
    "InvalidSpec",
    "RngStream",
    "SingularCovariance",
    "StatValue",
    "SymtestError",
    "TestReport",
    "bootstrap_stats_elliptical",
    "bootstrap_stats_spherical",
    "empirical_cov",
    "empirical_mean",
    "empirical_quantile",
    "eval_f",
    "inv_sqrt",
    "ks_statistic",
    "ks_statistic_brute",
    "make_grid",
    "normal_quantile",
    "parse_suite_file",
    "resample_with_replacement",
    "results_to_csv",
    "run_experiment",
    "run_suite",
    "sample_distribution",
    "sample_sphere",
    "standardize",
    "student_t_cdf",
    "sym_eigen",
    "test_elliptical",
    "test_spherical",
    "__version__",
]
