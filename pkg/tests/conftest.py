"""Shared fixtures and reference implementations for the test suite.

The Kriging reference here deliberately avoids Cholesky factorization:
everything goes through explicit matrix inverses and slogdet, so that
agreement with the production code is evidence of correctness rather
than of shared plumbing.
"""

import math

import numpy as np
import pytest

from kgopt.kriging import MIN_JITTER, Dataset, constant_basis

SQRT5 = math.sqrt(5.0)


def matern52_ref(xi, xj, theta):
    """Scalar Matern 5/2 correlation, written independently of the package."""
    d2 = 0.0
    for a, b, t in zip(xi, xj, theta):
        d2 += t * (a - b) ** 2
    l = math.sqrt(d2)
    return (1.0 + SQRT5 * l + (5.0 / 3.0) * d2) * math.exp(-SQRT5 * l)


def dense_reference(data, theta, jitter=MIN_JITTER, basis=None):
    """Explicit-inverse Kriging reference.

    Returns a dict with the negative concentrated log-likelihood and
    callables mean(x), var(x) in raw output units. Follows the same data
    contract as fit(): correlation on unit-cube inputs, standardized
    outputs, trend basis on raw coordinates.
    """
    basis = basis if basis is not None else constant_basis()
    span = data.upper - data.lower
    xn = (data.X - data.lower) / span
    y_mean = float(np.mean(data.y))
    y_scale = float(np.std(data.y))
    if y_scale <= 0.0:
        y_scale = 1.0
    y = (data.y - y_mean) / y_scale

    n = data.n
    psi = np.array(
        [[matern52_ref(xn[i], xn[j], theta) for j in range(n)] for i in range(n)]
    )
    psi += jitter * np.eye(n)
    psi_inv = np.linalg.inv(psi)
    F = np.array([basis.values(row) for row in data.X])

    gram = F.T @ psi_inv @ F
    gram_inv = np.linalg.inv(gram)
    beta = gram_inv @ F.T @ psi_inv @ y
    resid = y - F @ beta
    sigma2 = float(resid @ psi_inv @ resid) / n
    sign, logdet = np.linalg.slogdet(psi)
    assert sign > 0, "reference correlation matrix must be positive definite"
    nll = 0.5 * (n * math.log(sigma2) + logdet)

    def mean(x):
        x = np.asarray(x, float)
        r = np.array([matern52_ref((x - data.lower) / span, row, theta) for row in xn])
        m = basis.values(x)
        return y_mean + y_scale * float(m @ beta + r @ psi_inv @ resid)

    def var(x):
        x = np.asarray(x, float)
        r = np.array([matern52_ref((x - data.lower) / span, row, theta) for row in xn])
        u = basis.values(x) - F.T @ psi_inv @ r
        v = sigma2 * (1.0 - r @ psi_inv @ r + u @ gram_inv @ u)
        return y_scale**2 * max(float(v), 0.0)

    return {
        "nll": nll,
        "mean": mean,
        "var": var,
        "beta": beta,
        "sigma2": sigma2,
        "y_mean": y_mean,
        "y_scale": y_scale,
    }


def random_dataset(rng, n, d, lower=None, upper=None, fn=None, min_sep=0.0):
    """Dataset with distinct random inputs and a smooth default response.

    min_sep > 0 enforces a minimum pairwise distance in normalized
    coordinates (sequential rejection), keeping the correlation matrix
    well conditioned for exact-agreement comparisons.
    """
    lower = np.full(d, -1.0) if lower is None else np.asarray(lower, float)
    upper = np.full(d, 2.0) if upper is None else np.asarray(upper, float)
    rows = []
    while len(rows) < n:
        cand = rng.random(d)
        if min_sep > 0.0 and any(
            np.linalg.norm(cand - r) < min_sep for r in rows
        ):
            continue
        rows.append(cand)
    X = lower + (upper - lower) * np.array(rows)
    if fn is None:
        y = np.sin(X.sum(axis=1)) + 0.25 * (X**2).sum(axis=1)
    else:
        y = np.array([fn(row) for row in X])
    return Dataset(X=X, y=y, lower=lower, upper=upper)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
