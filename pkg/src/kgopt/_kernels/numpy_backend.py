"""Pure NumPy implementation of the numeric kernels.

Reference implementation for the compiled extension: both backends
expose the same three functions with identical semantics, and the
compiled one is checked against this module in the test suite. All
inputs live in the model's normalized coordinates; callers own the
mapping to and from raw units.
"""

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist

name = "numpy"

SQRT5 = np.sqrt(5.0)

# Floor for the process variance inside the likelihood. Exactly zero
# residuals (constant outputs) would otherwise send the concentrated
# likelihood to -inf and poison the comparison ordering.
SIGMA2_FLOOR = 1e-300


def _matern52_from_sq(l2):
    l = np.sqrt(l2)
    return (1.0 + SQRT5 * l + (5.0 / 3.0) * l2) * np.exp(-SQRT5 * l)


def corr_matrix(X, theta):
    """Matern 5/2 correlation among the rows of X. Unit diagonal."""
    Xs = np.asarray(X, float) * np.sqrt(theta)
    l2 = cdist(Xs, Xs, "sqeuclidean")
    np.fill_diagonal(l2, 0.0)
    return _matern52_from_sq(l2)


def cross_corr(A, B, theta):
    """Matern 5/2 correlation between the rows of A and the rows of B."""
    w = np.sqrt(theta)
    l2 = cdist(np.asarray(A, float) * w, np.asarray(B, float) * w, "sqeuclidean")
    # cdist can produce tiny negatives for coincident rows
    np.maximum(l2, 0.0, out=l2)
    return _matern52_from_sq(l2)


def nll_core(X, F, y, theta, jitter0, jitter_mult, jitter_max):
    """Negative concentrated log-likelihood 0.5*(n*log(sigma2) + log|Psi|).

    Returns (value, jitter_used, ok). ok is False when the Cholesky
    factorization keeps failing past jitter_max or the trend system is
    singular; value is +inf in that case.
    """
    n = len(y)
    psi = corr_matrix(X, theta)
    jitter = jitter0
    L = None
    while jitter <= jitter_max:
        try:
            L = cholesky(psi + jitter * np.eye(n), lower=True)
            break
        except np.linalg.LinAlgError:
            jitter *= jitter_mult
    if L is None:
        return np.inf, jitter, False
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    Ft = solve_triangular(L, F, lower=True)
    yt = solve_triangular(L, y, lower=True)
    try:
        G = cholesky(Ft.T @ Ft, lower=True)
    except np.linalg.LinAlgError:
        return np.inf, jitter, False
    alpha = cho_solve((G, True), Ft.T @ yt)
    resid = yt - Ft @ alpha
    sigma2 = float(resid @ resid) / n
    value = 0.5 * (n * np.log(max(sigma2, SIGMA2_FLOOR)) + logdet)
    return float(value), jitter, True


def predict_core(Xn, theta, L, Ft, alpha, gamma, G, sigma2, mx, xn):
    """Single-point prediction in normalized coordinates.

    Xn: training inputs, L: Cholesky factor of the jittered correlation
    matrix, Ft = L^-1 F, gamma = Psi^-1 (y - F alpha), G: Cholesky factor
    of Ft'Ft, mx: trend basis values at the query point.
    Returns (mean, variance) with the variance clamped at zero.
    """
    r = cross_corr(Xn, xn[None, :], theta)[:, 0]
    mean = float(mx @ alpha + r @ gamma)
    t = solve_triangular(L, r, lower=True)
    u = mx - Ft.T @ t
    v = solve_triangular(G, u, lower=True)
    var = sigma2 * (1.0 - float(t @ t) + float(v @ v))
    return mean, max(var, 0.0)
