"""Kriging-based global optimization with knowledge-gradient style
acquisition policies.

The pieces compose bottom-up: kriging fits a Matern 5/2 Gaussian
process surrogate, hyperfit estimates its hyperparameters (maximum
likelihood or a slice-sampled ensemble), policies score candidate
points from the predictive distribution, acquisition maximizes a
policy over the domain, and harness runs the full seeded optimization
loop over the benchmark problems with traces and aggregates.
"""

from ._kernels import active as _active_backend
from .acquisition import AcquisitionConfig, model_argmax, propose
from .benchmarks import (
    PROBLEMS,
    Problem,
    branin,
    eggholder,
    get_problem,
    hartmann6,
    opportunity_cost,
    schwefel2,
)
from .design import maximin_lhs
from .exceptions import (
    AcquisitionFailedError,
    EvaluationFailedError,
    IllConditionedError,
    InsufficientDataError,
    KgoptError,
    SamplingStalledError,
    UndefinedGradientError,
)
from .harness import (
    Aggregate,
    ExternalSpec,
    RunConfig,
    RunRecord,
    RunResult,
    aggregate_results,
    emit_results,
    run_experiment,
    run_single,
)
from .hyperfit import (
    LikelihoodEvaluation,
    ModelEnsemble,
    ensemble_policy_score,
    mle_ensemble,
    mle_fit,
    neg_concentrated_log_likelihood,
    slice_sample,
)
from .kriging import BasisSet, Dataset, KrigingModel, constant_basis, fit, matern52, matern52_gradient
from .policies import (
    PolicyContext,
    PolicyScore,
    PolicySpec,
    ed_gradient,
    ei_gradient,
    expected_decrement,
    expected_improvement,
    gp_ucb_beta,
    kgcp,
    soft_kgcp,
    soft_kgcp_gradient,
    ucb,
)

__version__ = "0.1.0"

backend_name = _active_backend.name
