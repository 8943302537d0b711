"""Kriging (Gaussian process regression) with a Matern 5/2 correlation.

The model is universal Kriging: a generalized-least-squares trend plus a
stationary correlated residual. Inputs are mapped to the unit cube and
outputs are standardized inside fit(), so correlation hyperparameters
always live in normalized coordinates regardless of the problem's units.
Predictions are reported back in raw units.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from ._kernels import active as _kern
from .exceptions import IllConditionedError, InsufficientDataError

SQRT5 = np.sqrt(5.0)

# Jitter schedule for the correlation Cholesky: start tiny, grow by
# 10x on failure, give up past 1e-4 (the matrix is then genuinely
# ill-conditioned for the requested hyperparameters).
MIN_JITTER = 1e-10
JITTER_GROWTH = 10.0
MAX_JITTER = 1e-4


def _as_point(x, d, name="x"):
    x = np.atleast_1d(np.asarray(x, float))
    if x.shape != (d,):
        raise ValueError(f"{name} must have shape ({d},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def _as_theta(theta, d):
    theta = np.atleast_1d(np.asarray(theta, float))
    if theta.shape != (d,):
        raise ValueError(f"theta must have shape ({d},), got {theta.shape}")
    if not np.all(np.isfinite(theta)) or np.any(theta <= 0.0):
        raise ValueError("theta entries must be finite and strictly positive")
    return theta


def matern52(xi, xj, theta):
    """Matern 5/2 correlation between two points.

    The anisotropic distance is l = sqrt(sum_k theta_k (xi_k - xj_k)^2)
    and the correlation is (1 + sqrt(5) l + 5 l^2 / 3) exp(-sqrt(5) l).

    Args:
        xi, xj: points of equal dimension d.
        theta: d positive per-coordinate weights.

    Returns:
        Correlation in (0, 1], 1 exactly when xi == xj.
    """
    xi = np.atleast_1d(np.asarray(xi, float))
    xj = _as_point(xj, xi.shape[0], "xj")
    xi = _as_point(xi, xi.shape[0], "xi")
    theta = _as_theta(theta, xi.shape[0])
    diff = xi - xj
    l2 = float(theta @ (diff * diff))
    l = np.sqrt(l2)
    return float((1.0 + SQRT5 * l + (5.0 / 3.0) * l2) * np.exp(-SQRT5 * l))


def matern52_gradient(xi, xj, theta):
    """Gradient of matern52 with respect to xi.

    Equals -(5/3) (1 + sqrt(5) l) exp(-sqrt(5) l) * theta * (xi - xj);
    the apparent 1/l singularity cancels, so the gradient is zero at
    xi == xj.
    """
    xi = np.atleast_1d(np.asarray(xi, float))
    xj = _as_point(xj, xi.shape[0], "xj")
    xi = _as_point(xi, xi.shape[0], "xi")
    theta = _as_theta(theta, xi.shape[0])
    diff = xi - xj
    l = np.sqrt(float(theta @ (diff * diff)))
    a = (5.0 / 3.0) * (1.0 + SQRT5 * l) * np.exp(-SQRT5 * l)
    return -a * theta * diff


@dataclass(frozen=True)
class BasisSet:
    """Trend basis: functions b_k mapping a raw point to a scalar, with
    matching analytic gradients."""

    functions: tuple
    gradients: tuple

    def __post_init__(self):
        if len(self.functions) == 0:
            raise ValueError("basis must contain at least one function")
        if len(self.functions) != len(self.gradients):
            raise ValueError("functions and gradients must pair up")

    @property
    def size(self) -> int:
        return len(self.functions)

    def values(self, x) -> np.ndarray:
        return np.array([f(x) for f in self.functions], float)

    def jacobian(self, x) -> np.ndarray:
        return np.array([np.asarray(g(x), float) for g in self.gradients])

    def design_matrix(self, X) -> np.ndarray:
        return np.array([self.values(row) for row in np.asarray(X, float)])


def constant_basis() -> BasisSet:
    """Ordinary-Kriging trend: the single constant function 1."""
    return BasisSet(
        functions=(lambda x: 1.0,),
        gradients=(lambda x: np.zeros(np.shape(x)[-1]),),
    )


@dataclass(frozen=True)
class Dataset:
    """Observations over a box domain.

    X: (n, d) inputs, y: (n,) maximization-oriented outputs, lower/upper:
    domain bounds. Rows of X must be pairwise distinct and inside the box.
    """

    X: np.ndarray
    y: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, float))
        y = np.atleast_1d(np.asarray(self.y, float))
        lower = np.atleast_1d(np.asarray(self.lower, float))
        upper = np.atleast_1d(np.asarray(self.upper, float))
        n, d = X.shape
        if y.shape != (n,):
            raise ValueError(f"y must have shape ({n},), got {y.shape}")
        if lower.shape != (d,) or upper.shape != (d,):
            raise ValueError("bounds must match the input dimension")
        for name, arr in (("X", X), ("y", y), ("lower", lower), ("upper", upper)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(upper <= lower):
            raise ValueError("upper must exceed lower in every coordinate")
        if np.any(X < lower) or np.any(X > upper):
            raise ValueError("all rows of X must lie inside the domain box")
        if len(np.unique(X, axis=0)) != n:
            raise ValueError("rows of X must be pairwise distinct")
        for name, arr in (("X", X), ("y", y), ("lower", lower), ("upper", upper)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def append(self, x, y) -> "Dataset":
        x = _as_point(x, self.dim)
        return Dataset(
            X=np.vstack([self.X, x[None, :]]),
            y=np.append(self.y, float(y)),
            lower=self.lower,
            upper=self.upper,
        )


@dataclass(frozen=True)
class KrigingModel:
    """Fitted Kriging model. Build with fit(); treat as immutable.

    alpha and sigma2 are reported in raw output units. theta lives in
    normalized input coordinates. jitter is the diagonal inflation that
    was actually applied to make the correlation matrix factorizable.
    """

    data: Dataset
    basis: BasisSet
    theta: np.ndarray
    alpha: np.ndarray
    sigma2: float
    jitter: float
    # normalized-space internals
    _xn: np.ndarray = field(repr=False, default=None)
    _L: np.ndarray = field(repr=False, default=None)
    _Ft: np.ndarray = field(repr=False, default=None)
    _G: np.ndarray = field(repr=False, default=None)
    _alpha_n: np.ndarray = field(repr=False, default=None)
    _gamma_n: np.ndarray = field(repr=False, default=None)
    _pinv_F: np.ndarray = field(repr=False, default=None)
    _sigma2_n: float = field(repr=False, default=0.0)
    _y_mean: float = field(repr=False, default=0.0)
    _y_scale: float = field(repr=False, default=1.0)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def dim(self) -> int:
        return self.data.dim

    def _normalize(self, x):
        return (x - self.data.lower) / self.data.span()

    def predict(self, x) -> tuple[float, float]:
        """Predictive mean and variance at one raw-space point.

        The variance is the universal-Kriging form: process variance
        times (1 - r' Psi^-1 r + correction for estimating the trend),
        clamped at zero against roundoff.
        """
        x = _as_point(x, self.dim)
        mean_n, var_n = _kern.predict_core(
            self._xn,
            self.theta,
            self._L,
            self._Ft,
            self._alpha_n,
            self._gamma_n,
            self._G,
            self._sigma2_n,
            self.basis.values(x),
            self._normalize(x),
        )
        return (
            self._y_mean + self._y_scale * mean_n,
            self._y_scale**2 * var_n,
        )

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized predict over the rows of X."""
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.dim or not np.all(np.isfinite(X)):
            raise ValueError("X must be finite with matching dimension")
        Xn = (X - self.data.lower) / self.data.span()
        R = _kern.cross_corr(self._xn, Xn, self.theta)
        M = self.basis.design_matrix(X)
        means_n = M @ self._alpha_n + R.T @ self._gamma_n
        T = solve_triangular(self._L, R, lower=True)
        U = M.T - self._Ft.T @ T
        V = solve_triangular(self._G, U, lower=True)
        var_n = self._sigma2_n * (1.0 - np.sum(T * T, axis=0) + np.sum(V * V, axis=0))
        np.maximum(var_n, 0.0, out=var_n)
        return self._y_mean + self._y_scale * means_n, self._y_scale**2 * var_n

    def predict_gradient(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of the predictive mean and variance at a raw point."""
        x = _as_point(x, self.dim)
        span = self.data.span()
        xn = self._normalize(x)
        diff = xn[None, :] - self._xn
        l2 = (diff * diff) @ self.theta
        l = np.sqrt(l2)
        e = np.exp(-SQRT5 * l)
        r = (1.0 + SQRT5 * l + (5.0 / 3.0) * l2) * e
        # d psi / d xn, rows indexed by training point
        Jn = -((5.0 / 3.0) * (1.0 + SQRT5 * l) * e)[:, None] * diff * self.theta[None, :]
        Jm = self.basis.jacobian(x)
        dmean_n = Jm.T @ self._alpha_n + (Jn.T @ self._gamma_n) / span
        t = solve_triangular(self._L, r, lower=True)
        w = solve_triangular(self._L, t, lower=True, trans="T")
        u = self.basis.values(x) - self._Ft.T @ t
        c = cho_solve((self._G, True), u)
        du = Jm - (self._pinv_F.T @ Jn) / span[None, :]
        dvar_n = self._sigma2_n * (-2.0 * (Jn.T @ w) / span + 2.0 * du.T @ c)
        return self._y_scale * dmean_n, self._y_scale**2 * dvar_n


def _prepare_arrays(data: Dataset, basis: BasisSet):
    """Normalized inputs, trend design matrix, standardized outputs.

    Shared by fit() and the likelihood so hyperparameters mean the same
    thing in both places. The trend basis sees raw coordinates; only the
    correlation works on the unit cube.
    """
    xn = (data.X - data.lower) / data.span()
    F = basis.design_matrix(data.X)
    y_mean = float(np.mean(data.y))
    y_scale = float(np.std(data.y))
    if y_scale <= 0.0:
        y_scale = 1.0
    y_n = (data.y - y_mean) / y_scale
    return xn, F, y_n, y_mean, y_scale


def _chol_with_jitter(psi):
    """Cholesky with the escalating jitter schedule. Returns (L, jitter)."""
    n = psi.shape[0]
    jitter = MIN_JITTER
    while jitter <= MAX_JITTER:
        try:
            return cholesky(psi + jitter * np.eye(n), lower=True), jitter
        except np.linalg.LinAlgError:
            jitter *= JITTER_GROWTH
    raise IllConditionedError(
        f"correlation matrix not positive definite at jitter {MAX_JITTER:g}"
    )


def fit(data: Dataset, theta, basis: BasisSet | None = None) -> KrigingModel:
    """Fit a Kriging model with fixed correlation hyperparameters.

    Trend coefficients come from generalized least squares through the
    Cholesky factor of the correlation matrix; the process variance is
    the mean weighted squared residual. theta is interpreted in the
    normalized (unit cube) coordinates.

    Raises:
        InsufficientDataError: fewer points than basis functions.
        IllConditionedError: correlation matrix cannot be factorized
            within the jitter schedule, or the trend system is singular.
    """
    basis = basis if basis is not None else constant_basis()
    theta = _as_theta(theta, data.dim)
    n, p = data.n, basis.size
    if n < p:
        raise InsufficientDataError(f"need at least {p} observations, have {n}")

    xn, F, y_n, y_mean, y_scale = _prepare_arrays(data, basis)

    psi = _kern.corr_matrix(xn, theta)
    try:
        L, jitter = _chol_with_jitter(psi)
    except IllConditionedError as exc:
        raise IllConditionedError(f"{exc} (theta={theta.tolist()})") from None

    Ft = solve_triangular(L, F, lower=True)
    yt = solve_triangular(L, y_n, lower=True)
    try:
        G = cholesky(Ft.T @ Ft, lower=True)
    except np.linalg.LinAlgError:
        raise IllConditionedError(
            f"trend design matrix is singular (theta={theta.tolist()})"
        ) from None
    alpha_n = cho_solve((G, True), Ft.T @ yt)
    resid = yt - Ft @ alpha_n
    sigma2_n = float(resid @ resid) / n
    gamma_n = solve_triangular(L, resid, lower=True, trans="T")
    pinv_F = solve_triangular(L, Ft, lower=True, trans="T")

    # Raw-unit equivalents: with a constant-containing basis these are
    # exactly the GLS coefficients on the unstandardized outputs.
    ones_t = solve_triangular(L, np.ones(n), lower=True)
    c_ones = cho_solve((G, True), Ft.T @ ones_t)
    alpha = y_scale * alpha_n + y_mean * c_ones

    return KrigingModel(
        data=data,
        basis=basis,
        theta=theta,
        alpha=alpha,
        sigma2=y_scale**2 * sigma2_n,
        jitter=jitter,
        # compiled kernels want C-contiguous buffers
        _xn=np.ascontiguousarray(xn),
        _L=np.ascontiguousarray(L),
        _Ft=np.ascontiguousarray(Ft),
        _G=np.ascontiguousarray(G),
        _alpha_n=alpha_n,
        _gamma_n=gamma_n,
        _pinv_F=pinv_F,
        _sigma2_n=sigma2_n,
        _y_mean=y_mean,
        _y_scale=y_scale,
    )
