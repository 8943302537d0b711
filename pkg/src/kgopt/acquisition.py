"""Inner optimization: maximize a policy score over the design domain.

The scheme is Monte-Carlo screening plus local polish: score a uniform
candidate cloud, refine the best handful with coordinate pattern
search, and return the overall winner. The same machinery locates the
model's own argmax for reporting a final design.
"""

from dataclasses import dataclass

import numpy as np

from ._search import pattern_search
from .exceptions import AcquisitionFailedError
from .hyperfit import ModelEnsemble, ensemble_policy_score, ensemble_policy_values_batch
from .policies import PolicyContext, PolicySpec

# Any proposal closer than this to a training point, in normalized
# coordinates, is treated as a duplicate and skipped.
DUPLICATE_TOL = 1e-9


@dataclass(frozen=True)
class AcquisitionConfig:
    """Candidate generation and refinement knobs.

    mc_candidates None means 1000 per input dimension. local_refine is
    how many screened leaders get pattern-search polish, each under
    local_budget score evaluations with steps starting at 5% of the
    domain width and stopping at 1e-6 relative width.
    """

    mc_candidates: int | None = None
    local_refine: int = 10
    local_budget: int = 200
    init_step_frac: float = 0.05
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.mc_candidates is not None and self.mc_candidates < 1:
            raise ValueError("mc_candidates must be positive")
        if self.local_refine < 0 or self.local_budget < 1:
            raise ValueError("local_refine must be >= 0 and local_budget >= 1")

    def n_candidates(self, dim: int) -> int:
        return self.mc_candidates if self.mc_candidates is not None else 1000 * dim


def _screen_and_refine(score_batch, score_one, lower, upper, config, rng):
    """Shared candidate loop. Returns (points, scores) sorted best
    first: refined leaders first, then the remaining raw candidates."""
    d = lower.shape[0]
    m = config.n_candidates(d)
    cands = rng.uniform(lower, upper, size=(m, d))
    scores = np.asarray(score_batch(cands), float)
    # stable sort keeps earlier candidates ahead on ties
    order = np.argsort(-scores, kind="stable")

    refined_pts = []
    refined_scores = []
    for idx in order[: config.local_refine]:
        x, fx, _ = pattern_search(
            score_one,
            cands[idx],
            lower,
            upper,
            budget=config.local_budget,
            init_step_frac=config.init_step_frac,
            rel_tol=config.rel_tol,
        )
        refined_pts.append(np.clip(x, lower, upper))
        refined_scores.append(fx)

    rest = order[config.local_refine :]
    pts = refined_pts + [cands[i] for i in rest]
    vals = refined_scores + [scores[i] for i in rest]
    rank = np.argsort(-np.asarray(vals), kind="stable")
    return [pts[i] for i in rank], [float(vals[i]) for i in rank]


def propose(
    ensemble: ModelEnsemble,
    spec: PolicySpec,
    context: PolicyContext,
    config: AcquisitionConfig | None = None,
    rng=None,
) -> tuple[np.ndarray, float]:
    """Next evaluation point: the policy-score argmax over the domain.

    Returns (x, score). The returned point always lies inside the
    domain and never sits within DUPLICATE_TOL (normalized) of an
    existing training point; when the score landscape drives every
    leader onto a training point, the best non-duplicate candidate is
    taken instead.
    """
    config = config if config is not None else AcquisitionConfig()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    data = ensemble.data
    lower, upper = data.lower, data.upper
    span = data.span()
    xn_train = (data.X - lower) / span

    def score_batch(X):
        return ensemble_policy_values_batch(ensemble, spec, X, context)

    def score_one(x):
        return ensemble_policy_score(ensemble, spec, x, context).value

    pts, vals = _screen_and_refine(score_batch, score_one, lower, upper, config, rng)
    for x, val in zip(pts, vals):
        dist = np.sqrt(np.sum(((x - lower) / span - xn_train) ** 2, axis=1))
        if np.min(dist) > DUPLICATE_TOL:
            return x, val
    raise AcquisitionFailedError(
        "every candidate coincides with an existing training point"
    )


def model_argmax(
    ensemble: ModelEnsemble,
    config: AcquisitionConfig | None = None,
    rng=None,
) -> np.ndarray:
    """Argmax of the ensemble-averaged predictive mean over the domain.

    Same screen-and-refine scheme as propose, but training points are
    legitimate answers here, so no duplicate guard applies.
    """
    config = config if config is not None else AcquisitionConfig()
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    data = ensemble.data

    def score_batch(X):
        return ensemble.mean_prediction_batch(X)

    def score_one(x):
        return ensemble.mean_prediction(x)

    pts, _ = _screen_and_refine(
        score_batch, score_one, data.lower, data.upper, config, rng
    )
    return pts[0]
