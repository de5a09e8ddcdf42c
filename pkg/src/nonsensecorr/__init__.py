"""Monte Carlo checks of nonsense association between independent dependent vectors.

Samplers for Ising models on lattices and dense regular graphs and for
structured Gaussian vectors, the association statistics, their predicted
limit laws, and a replicated experiment harness.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConstructionError,
    DegenerateInputError,
    DimensionError,
    ExperimentAborted,
    NoPredictionError,
    NonsenseCorrError,
    OutOfRegimeError,
    ParameterError,
    SizeError,
    UnsupportedDimensionError,
)
from .graphs import (
    CompleteBipartite,
    CurieWeiss,
    ExplicitMatrix,
    Lattice,
    RandomRegular,
    build_interaction,
    check_assumptions,
)
from .ising import IsingModel, SamplerPlan, brute_force_pmf, sample_ising, solve_magnetization
from .gaussian import (
    EigenProfile,
    EigenSpec,
    Equicorrelation,
    FromEigenSpec,
    IdentityScaled,
    build_covariance,
    sample_gaussian,
    tilde_spectrum,
)
from .stats import association, ols_fit, sample_correlation, sample_covariance
from .theory import (
    LimitPrediction,
    ols_condition,
    predict_curie_weiss,
    predict_gaussian,
    predict_lattice,
)
from .kstest import ks_test
from .montecarlo import (
    ExperimentConfig,
    GaussianSpec,
    IsingSpec,
    McReport,
    monotonicity_sweep,
    ols_coverage_experiment,
    run_experiment,
)
