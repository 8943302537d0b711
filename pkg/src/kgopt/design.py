"""Space-filling initial designs."""

import numpy as np
from scipy.spatial.distance import pdist

# How many random Latin hypercubes compete for the best minimum
# pairwise distance.
LHS_CANDIDATES = 1000


def maximin_lhs(n, lower, upper, rng=None, n_candidates=LHS_CANDIDATES):
    """Maximin Latin hypercube design with n points.

    Draws n_candidates random Latin hypercubes (points at stratum
    centers, one stratum per point and dimension) and keeps the one
    maximizing the minimum pairwise distance in normalized coordinates.
    Ties keep the earliest candidate, so the result is deterministic
    for a fixed seed. n == 1 returns the domain center.
    """
    lower = np.atleast_1d(np.asarray(lower, float))
    upper = np.atleast_1d(np.asarray(upper, float))
    if n < 1:
        raise ValueError("n must be at least 1")
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ValueError("lower and upper must be 1-D with equal shapes")
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("bounds must be finite")
    if np.any(upper <= lower):
        raise ValueError("upper must exceed lower in every coordinate")
    d = lower.shape[0]
    if n == 1:
        return (0.5 * (lower + upper))[None, :]

    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    centers = (np.arange(n) + 0.5) / n
    best_unit = None
    best_dist = -np.inf
    for _ in range(n_candidates):
        unit = np.empty((n, d))
        for k in range(d):
            unit[:, k] = centers[rng.permutation(n)]
        dmin = float(np.min(pdist(unit)))
        if dmin > best_dist:
            best_dist = dmin
            best_unit = unit
    return lower + best_unit * (upper - lower)
