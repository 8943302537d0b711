"""Bounded coordinate pattern search shared by hyperparameter fitting
and acquisition refinement."""

import numpy as np


def pattern_search(f, x0, lower, upper, budget, init_step_frac=0.05, rel_tol=1e-6):
    """Maximize f over a box by opportunistic coordinate polling.

    Polls +/- one step along each coordinate in order, moves greedily on
    the first strict improvement, and halves the step vector after any
    full sweep without one. Stops when every step falls below rel_tol of
    the corresponding box width or the evaluation budget is spent. Fully
    deterministic for a deterministic f.

    Returns (x_best, f_best, evaluations).
    """
    lower = np.asarray(lower, float)
    upper = np.asarray(upper, float)
    span = upper - lower
    x = np.clip(np.asarray(x0, float), lower, upper)
    step = init_step_frac * span
    fx = f(x)
    evals = 1
    d = x.shape[0]
    while evals < budget and np.max(step / span) > rel_tol:
        improved = False
        for k in range(d):
            for sign in (1.0, -1.0):
                if evals >= budget:
                    return x, fx, evals
                xk = min(max(x[k] + sign * step[k], lower[k]), upper[k])
                if xk == x[k]:
                    continue
                cand = x.copy()
                cand[k] = xk
                fc = f(cand)
                evals += 1
                if fc > fx:
                    x, fx = cand, fc
                    improved = True
                    break
        if not improved:
            step = step * 0.5
    return x, fx, evals
