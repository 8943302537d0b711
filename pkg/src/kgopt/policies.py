"""Acquisition policies on top of a Gaussian predictive distribution.

All policies take the predictive mean mu, predictive standard deviation
s, and the incumbent best observation y_max, every one of them oriented
for maximization. Expected improvement rewards upside beyond y_max;
expected decrement is its mirror, the expected drop of the incumbent's
posterior value; their pointwise minimum is the knowledge-gradient
style compromise, available in a hard and a smoothed form.

Functions broadcast over NumPy arrays and return scalars for scalar
input.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .exceptions import UndefinedGradientError

# Standardized distances beyond this are numerically in the tail where
# the closed forms degenerate; values switch to their exact limits.
Z_CLAMP = 38.0

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _npdf(z):
    return INV_SQRT_2PI * np.exp(-0.5 * z * z)


def _check_mu_s(mu, s, y_max):
    mu = np.asarray(mu, float)
    s = np.asarray(s, float)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(s))):
        raise ValueError("mu and s must be finite")
    if not np.all(np.isfinite(np.asarray(y_max, float))):
        raise ValueError("y_max must be finite")
    if np.any(s < 0.0):
        raise ValueError("s must be nonnegative")
    return mu, s


def _z_of(mu, s, y_max):
    # (y_max - mu) / s with the s == 0 slots parked at 0; callers mask
    # those out separately.
    safe = np.where(s > 0.0, s, 1.0)
    z = (y_max - mu) / safe
    return np.clip(z, -Z_CLAMP, Z_CLAMP)


def _scalarize(out, scalar_in):
    return float(out) if scalar_in else out


def expected_improvement(mu, s, y_max):
    """E[max(Y - y_max, 0)] for Y ~ Normal(mu, s^2).

    Closed form (mu - y_max) Phi(-z) + s phi(z) with z = (y_max - mu)/s.
    Degenerate s == 0 collapses to max(mu - y_max, 0); |z| beyond the
    clamp uses the exact tail limits (0 and mu - y_max).
    """
    scalar = np.isscalar(mu) and np.isscalar(s)
    mu, s = _check_mu_s(mu, s, y_max)
    z = _z_of(mu, s, y_max)
    val = (mu - y_max) * ndtr(-z) + s * _npdf(z)
    val = np.where(z >= Z_CLAMP, 0.0, val)
    val = np.where(z <= -Z_CLAMP, mu - y_max, val)
    val = np.where(s == 0.0, np.maximum(mu - y_max, 0.0), val)
    return _scalarize(np.maximum(val, 0.0), scalar)


def expected_decrement(mu, s, y_max):
    """E[max(Y, y_max)] - mu for Y ~ Normal(mu, s^2): the mirror of
    expected improvement. Closed form (y_max - mu) Phi(z) + s phi(z).
    Degenerate s == 0 collapses to max(y_max - mu, 0)."""
    scalar = np.isscalar(mu) and np.isscalar(s)
    mu, s = _check_mu_s(mu, s, y_max)
    z = _z_of(mu, s, y_max)
    val = (y_max - mu) * ndtr(z) + s * _npdf(z)
    val = np.where(z >= Z_CLAMP, y_max - mu, val)
    val = np.where(z <= -Z_CLAMP, 0.0, val)
    val = np.where(s == 0.0, np.maximum(y_max - mu, 0.0), val)
    return _scalarize(np.maximum(val, 0.0), scalar)


def kgcp(mu, s, y_max):
    """Pointwise minimum of expected improvement and expected decrement."""
    return np.minimum(
        expected_improvement(mu, s, y_max), expected_decrement(mu, s, y_max)
    )


def soft_kgcp(mu, s, y_max, k):
    """Smooth-minimum relaxation -log(exp(-k EI) + exp(-k ED)) / k.

    Computed shift-safe as min - log1p(exp(-k |EI - ED|)) / k, which
    never overflows and approaches the hard minimum from below as k
    grows (gap at most log(2)/k).
    """
    if not np.isfinite(k) or k <= 0.0:
        raise ValueError("k must be finite and strictly positive")
    ei = expected_improvement(mu, s, y_max)
    ed = expected_decrement(mu, s, y_max)
    m = np.minimum(ei, ed)
    return m - np.log1p(np.exp(-k * np.abs(ei - ed))) / k


def ucb(mu, s, beta):
    """Upper confidence bound mu + beta * s."""
    mu = np.asarray(mu, float)
    s = np.asarray(s, float)
    if not np.isfinite(beta) or beta < 0.0:
        raise ValueError("beta must be finite and nonnegative")
    if np.any(s < 0.0):
        raise ValueError("s must be nonnegative")
    out = mu + beta * s
    return float(out) if out.ndim == 0 else out


def gp_ucb_beta(n, d, delta=0.1):
    """Confidence multiplier schedule sqrt(2 log(n^(d/2+2) pi^2 / (3 delta)))."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if d < 1:
        raise ValueError("d must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return float(np.sqrt(2.0 * np.log(float(n) ** (d / 2.0 + 2.0) * np.pi**2 / (3.0 * delta))))


def _check_gradient_inputs(mu, s, dmu, ds, y_max):
    if not (np.isfinite(mu) and np.isfinite(y_max)):
        raise ValueError("mu and y_max must be finite")
    if not np.isfinite(s) or s < 0.0:
        raise ValueError("s must be finite and nonnegative")
    if s == 0.0:
        raise UndefinedGradientError("policy gradient undefined at zero spread")
    dmu = np.asarray(dmu, float)
    ds = np.asarray(ds, float)
    if not (np.all(np.isfinite(dmu)) and np.all(np.isfinite(ds))):
        raise ValueError("dmu and ds must be finite")
    return dmu, ds


def ei_gradient(mu, s, dmu, ds, y_max):
    """Gradient of expected improvement through (mu(x), s(x)).

    dEI = (-z Phi(-z) + phi(z)) ds - s Phi(-z) dz with
    dz = -(dmu + z ds) / s.
    """
    dmu, ds = _check_gradient_inputs(mu, s, dmu, ds, y_max)
    z = float(np.clip((y_max - mu) / s, -Z_CLAMP, Z_CLAMP))
    dz = -(dmu + z * ds) / s
    return (-z * ndtr(-z) + _npdf(z)) * ds - s * ndtr(-z) * dz


def ed_gradient(mu, s, dmu, ds, y_max):
    """Gradient of expected decrement:
    dED = (z Phi(z) + phi(z)) ds + s Phi(z) dz."""
    dmu, ds = _check_gradient_inputs(mu, s, dmu, ds, y_max)
    z = float(np.clip((y_max - mu) / s, -Z_CLAMP, Z_CLAMP))
    dz = -(dmu + z * ds) / s
    return (z * ndtr(z) + _npdf(z)) * ds + s * ndtr(z) * dz


def soft_kgcp_gradient(mu, s, dmu, ds, y_max, k):
    """Gradient of the smooth minimum: the EI/ED gradients blended with
    the opposite branch's weight,
    (e^{k EI} dED + e^{k ED} dEI) / (e^{k EI} + e^{k ED}),
    evaluated with a shifted exponent so large k cannot overflow."""
    if not np.isfinite(k) or k <= 0.0:
        raise ValueError("k must be finite and strictly positive")
    ei = expected_improvement(mu, s, y_max)
    ed = expected_decrement(mu, s, y_max)
    dei = ei_gradient(mu, s, dmu, ds, y_max)
    ded = ed_gradient(mu, s, dmu, ds, y_max)
    a, b = k * ei, k * ed
    m = max(a, b)
    wa, wb = np.exp(a - m), np.exp(b - m)
    return (wa * ded + wb * dei) / (wa + wb)


POLICY_NAMES = ("kgcp", "ei", "ucb", "soft_kgcp")

# Smoothing strength used when soft KGCP is run as a policy and the
# caller does not override it.
DEFAULT_SOFT_K = 1e4


@dataclass(frozen=True)
class PolicySpec:
    """Which policy to run. name is one of POLICY_NAMES."""

    name: str

    def __post_init__(self):
        if self.name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.name!r}; choose from {POLICY_NAMES}")


@dataclass(frozen=True)
class PolicyContext:
    """Per-iteration quantities a policy score depends on besides the
    model: the incumbent y_max, the iteration count (observations so
    far), the UCB multiplier for this iteration, and the soft-minimum
    strength."""

    y_max: float
    iteration: int
    ucb_beta: float = 0.0
    soft_k: float = DEFAULT_SOFT_K

    def __post_init__(self):
        if not np.isfinite(self.y_max):
            raise ValueError("y_max must be finite")
        if self.iteration < 0:
            raise ValueError("iteration must be nonnegative")


@dataclass(frozen=True)
class PolicyScore:
    """Policy value at a point, with the gradient when one was requested."""

    value: float
    gradient: np.ndarray | None = None


def policy_values(spec: PolicySpec, mu, s, context: PolicyContext):
    """Vectorized policy score from predictive mean(s) and spread(s)."""
    if spec.name == "kgcp":
        return kgcp(mu, s, context.y_max)
    if spec.name == "ei":
        return expected_improvement(mu, s, context.y_max)
    if spec.name == "soft_kgcp":
        return soft_kgcp(mu, s, context.y_max, context.soft_k)
    return ucb(mu, s, context.ucb_beta)


def policy_gradient(spec: PolicySpec, mu, s, dmu, ds, context: PolicyContext):
    """Policy gradient from the predictive value and its gradients.

    The hard KGCP minimum has kinks where EI == ED, so its gradient is
    refused; use soft_kgcp for a differentiable variant.
    """
    if spec.name == "ei":
        return ei_gradient(mu, s, dmu, ds, context.y_max)
    if spec.name == "soft_kgcp":
        return soft_kgcp_gradient(mu, s, dmu, ds, context.y_max, context.soft_k)
    if spec.name == "ucb":
        dmu, ds = _check_gradient_inputs(mu, s, dmu, ds, context.y_max)
        return dmu + context.ucb_beta * ds
    raise ValueError("hard kgcp is not differentiable; use soft_kgcp")
