"""Correlation hyperparameter estimation.

Two routes: a multistart maximum-likelihood point estimate, and a
slice-sampled posterior ensemble started from that estimate. Both work
on log10(theta) over a fixed box of decades, which keeps the search
scale-free since inputs are normalized to the unit cube before the
correlation sees them.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import active as _kern
from ._search import pattern_search
from .exceptions import (
    IllConditionedError,
    InsufficientDataError,
    SamplingStalledError,
    UndefinedGradientError,
)
from .kriging import (
    JITTER_GROWTH,
    MAX_JITTER,
    MIN_JITTER,
    BasisSet,
    Dataset,
    KrigingModel,
    _as_theta,
    _prepare_arrays,
    constant_basis,
    fit,
)
from .policies import PolicyContext, PolicyScore, PolicySpec, policy_gradient, policy_values

# Search box for log10(theta), per coordinate.
LOG10_LOWER = -3.0
LOG10_UPPER = 3.0

MLE_STARTS = 20
MLE_BUDGET_PER_START = 500

# Slice sampler: step width of one decade, doubling step-out cap, and
# how many shrink attempts to allow before declaring the chain stuck.
SLICE_WIDTH = 1.0
SLICE_MAX_DOUBLINGS = 10
SLICE_MAX_SHRINKS = 100


@dataclass(frozen=True)
class LikelihoodEvaluation:
    """Concentrated likelihood at one theta. valid is False when the
    correlation matrix could not be factorized there; value is +inf in
    that case so comparisons still order correctly."""

    theta: np.ndarray
    value: float
    valid: bool


def neg_concentrated_log_likelihood(
    data: Dataset, theta, basis: BasisSet | None = None
) -> LikelihoodEvaluation:
    """0.5 * (n log(sigma2_hat) + log det(Psi)) at the given theta.

    sigma2_hat is the GLS process variance, so the likelihood is
    concentrated: trend coefficients and process variance are profiled
    out and only theta remains. Lower is better.
    """
    basis = basis if basis is not None else constant_basis()
    theta = _as_theta(theta, data.dim)
    if data.n < basis.size:
        raise InsufficientDataError(
            f"need at least {basis.size} observations, have {data.n}"
        )
    xn, F, y_n, _, _ = _prepare_arrays(data, basis)
    value, _, ok = _kern.nll_core(
        xn, F, y_n, theta, MIN_JITTER, JITTER_GROWTH, MAX_JITTER
    )
    return LikelihoodEvaluation(theta=theta, value=float(value), valid=bool(ok))


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def mle_fit(
    data: Dataset,
    rng=None,
    basis: BasisSet | None = None,
    n_starts: int = MLE_STARTS,
    budget_per_start: int = MLE_BUDGET_PER_START,
) -> KrigingModel:
    """Multistart maximum-likelihood fit.

    Uniform random starts in log10(theta) over the decade box, each
    refined by coordinate pattern search on the negative concentrated
    log-likelihood under a per-start evaluation budget. Ties between
    starts break to the lowest likelihood value, then to the
    lexicographically smallest theta, so the result is reproducible for
    a fixed seed.
    """
    basis = basis if basis is not None else constant_basis()
    if data.n < basis.size:
        raise InsufficientDataError(
            f"need at least {basis.size} observations, have {data.n}"
        )
    rng = _as_rng(rng)
    d = data.dim
    xn, F, y_n, _, _ = _prepare_arrays(data, basis)

    def objective(v):
        value, _, ok = _kern.nll_core(
            xn, F, y_n, 10.0**v, MIN_JITTER, JITTER_GROWTH, MAX_JITTER
        )
        return -value if ok else -np.inf

    lower = np.full(d, LOG10_LOWER)
    upper = np.full(d, LOG10_UPPER)
    starts = rng.uniform(LOG10_LOWER, LOG10_UPPER, size=(n_starts, d))
    best_key = None
    best_v = None
    for i in range(n_starts):
        v, fv, _ = pattern_search(objective, starts[i], lower, upper, budget_per_start)
        if not np.isfinite(fv):
            continue
        key = (-fv, tuple(10.0**v))
        if best_key is None or key < best_key:
            best_key = key
            best_v = v
    if best_v is None:
        raise IllConditionedError(
            "no valid hyperparameters found across all likelihood starts"
        )
    return fit(data, 10.0**best_v, basis)


@dataclass(frozen=True)
class ModelEnsemble:
    """One or more fitted models treated as a single surrogate.

    origin records how the ensemble was produced ("mle" for the point
    estimate, "slice" for posterior samples). Policy scores average at
    the score level across members; parameters are never averaged.
    """

    models: tuple
    origin: str

    def __post_init__(self):
        if len(self.models) == 0:
            raise ValueError("ensemble must contain at least one model")

    @property
    def size(self) -> int:
        return len(self.models)

    @property
    def data(self) -> Dataset:
        return self.models[0].data

    def mean_prediction_batch(self, X) -> np.ndarray:
        """Ensemble-averaged predictive mean over rows of X."""
        acc = None
        for m in self.models:
            means, _ = m.predict_batch(X)
            acc = means if acc is None else acc + means
        return acc / self.size

    def mean_prediction(self, x) -> float:
        return float(np.mean([m.predict(x)[0] for m in self.models]))


def slice_sample(
    data: Dataset,
    h: int,
    rng=None,
    basis: BasisSet | None = None,
    mle_model: KrigingModel | None = None,
) -> ModelEnsemble:
    """Posterior ensemble for theta by coordinate-wise slice sampling.

    The chain runs in log10(theta) targeting exp(-negLogLik), starting
    at the maximum-likelihood estimate, with no burn-in and no thinning:
    every completed sweep over the coordinates is retained, h sweeps in
    total. Step-out doubles the bracket up to a cap; points outside the
    decade box count as zero likelihood.

    Raises SamplingStalledError when a bracket cannot produce an
    acceptable point within the shrink budget.
    """
    if h < 1:
        raise ValueError("h must be at least 1")
    basis = basis if basis is not None else constant_basis()
    rng = _as_rng(rng)
    if mle_model is None:
        mle_model = mle_fit(data, rng, basis)
    xn, F, y_n, _, _ = _prepare_arrays(data, basis)

    lo, hi = LOG10_LOWER, LOG10_UPPER

    def log_density(v):
        if np.any(v < lo) or np.any(v > hi):
            return -np.inf
        value, _, ok = _kern.nll_core(
            xn, F, y_n, 10.0**v, MIN_JITTER, JITTER_GROWTH, MAX_JITTER
        )
        return -value if ok else -np.inf

    v = np.clip(np.log10(mle_model.theta), lo, hi)
    ll = log_density(v)
    if not np.isfinite(ll):
        raise SamplingStalledError("slice sampler cannot start: MLE has zero density")

    models = []
    d = data.dim
    for _ in range(h):
        for k in range(d):
            level = ll - rng.exponential()
            left = v[k] - SLICE_WIDTH * rng.uniform()
            right = left + SLICE_WIDTH

            def coord_density(val):
                w = v.copy()
                w[k] = val
                return log_density(w)

            for _ in range(SLICE_MAX_DOUBLINGS):
                if coord_density(left) < level and coord_density(right) < level:
                    break
                if rng.uniform() < 0.5:
                    left -= right - left
                else:
                    right += right - left
            left = max(left, lo)
            right = min(right, hi)

            for _ in range(SLICE_MAX_SHRINKS):
                proposal = rng.uniform(left, right)
                cand_ll = coord_density(proposal)
                if cand_ll >= level:
                    v[k] = proposal
                    ll = cand_ll
                    break
                if proposal < v[k]:
                    left = proposal
                else:
                    right = proposal
            else:
                raise SamplingStalledError(
                    f"slice bracket shrank {SLICE_MAX_SHRINKS} times without "
                    f"an acceptable point (coordinate {k})"
                )
        models.append(fit(data, 10.0**v, basis))
    return ModelEnsemble(models=tuple(models), origin="slice")


def mle_ensemble(data: Dataset, rng=None, basis: BasisSet | None = None) -> ModelEnsemble:
    """Singleton ensemble around the maximum-likelihood model."""
    return ModelEnsemble(models=(mle_fit(data, rng, basis),), origin="mle")


def ensemble_policy_score(
    ensemble: ModelEnsemble,
    spec: PolicySpec,
    x,
    context: PolicyContext,
    with_gradient: bool = False,
) -> PolicyScore:
    """Policy score at x averaged over ensemble members.

    For a singleton ensemble this is exactly the single model's score.
    Gradients average the per-member policy gradients; requesting one
    where any member has zero spread raises UndefinedGradientError.
    """
    values = []
    grads = []
    for m in ensemble.models:
        mu, var = m.predict(x)
        s = math.sqrt(var)
        values.append(float(policy_values(spec, mu, s, context)))
        if with_gradient:
            if s == 0.0:
                raise UndefinedGradientError("zero predictive spread at x")
            dmu, dvar = m.predict_gradient(x)
            ds = dvar / (2.0 * s)
            grads.append(policy_gradient(spec, mu, s, dmu, ds, context))
    gradient = np.mean(grads, axis=0) if with_gradient else None
    return PolicyScore(value=float(np.mean(values)), gradient=gradient)


def ensemble_policy_values_batch(
    ensemble: ModelEnsemble, spec: PolicySpec, X, context: PolicyContext
) -> np.ndarray:
    """Vectorized ensemble-averaged policy values over rows of X."""
    acc = None
    for m in ensemble.models:
        means, variances = m.predict_batch(X)
        s = np.sqrt(variances)
        vals = policy_values(spec, means, s, context)
        acc = vals if acc is None else acc + vals
    return acc / ensemble.size
