"""Benchmark objectives, stored maximization-oriented.

Every classical test function here is a minimization problem in the
literature; evaluate() returns its negative so the optimizer always
maximizes and true_optimum is the maximal attainable value. Optimizer
locations carry enough digits that the stored optimum dominates the
domain to well below reporting precision.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import KgoptError


@dataclass(frozen=True)
class Problem:
    """A box-constrained maximization problem with a known optimum.

    true_optimum may be NaN for external objectives whose optimum is
    unknown; opportunity costs are then NaN as well. budget is the
    total number of observations a standard run spends, initial design
    included.
    """

    name: str
    lower: np.ndarray
    upper: np.ndarray
    fn: Callable = field(repr=False)
    true_optimum: float
    true_optimizer: np.ndarray | None
    budget: int

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, float))
        upper = np.atleast_1d(np.asarray(self.upper, float))
        if lower.shape != upper.shape or np.any(upper <= lower):
            raise ValueError("invalid domain bounds")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.true_optimizer is not None:
            opt = np.atleast_1d(np.asarray(self.true_optimizer, float))
            opt.setflags(write=False)
            object.__setattr__(self, "true_optimizer", opt)
        if self.budget < 2:
            raise ValueError("budget must be at least 2")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def evaluate(self, x) -> float:
        """Maximization-oriented objective value at x (must be in the box)."""
        x = np.atleast_1d(np.asarray(x, float))
        if x.shape != self.lower.shape:
            raise ValueError(f"x must have shape {self.lower.shape}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("x must be finite")
        if np.any(x < self.lower) or np.any(x > self.upper):
            raise ValueError(f"x outside the domain of {self.name}")
        return float(self.fn(x))


def branin() -> Problem:
    """Negated Branin over [-5, 10] x [0, 15]; three global maxima of
    value -5/(4 pi), one at exactly (pi, 2.275)."""

    def fn(x):
        x1, x2 = x
        a = x2 - 5.1 * x1**2 / (4.0 * np.pi**2) + 5.0 * x1 / np.pi - 6.0
        return -(a * a + 10.0 * (1.0 - 1.0 / (8.0 * np.pi)) * np.cos(x1) + 10.0)

    return Problem(
        name="branin",
        lower=np.array([-5.0, 0.0]),
        upper=np.array([10.0, 15.0]),
        fn=fn,
        true_optimum=-0.39788735772973816,
        true_optimizer=np.array([np.pi, 2.275]),
        budget=20,
    )


_HARTMANN6_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
        [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
        [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
        [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
    ]
)
_HARTMANN6_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
        [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
        [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
        [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
    ]
)
_HARTMANN6_C = np.array([1.0, 1.2, 3.0, 3.2])


def hartmann6() -> Problem:
    """Negated six-dimensional Hartmann function on the unit cube."""

    def fn(x):
        inner = np.sum(_HARTMANN6_A * (x - _HARTMANN6_P) ** 2, axis=1)
        return np.sum(_HARTMANN6_C * np.exp(-inner))

    return Problem(
        name="hartmann6",
        lower=np.zeros(6),
        upper=np.ones(6),
        fn=fn,
        true_optimum=3.3223680114155116,
        true_optimizer=np.array(
            [0.20168952, 0.15001069, 0.47687398, 0.27533243, 0.31165162, 0.65730054]
        ),
        budget=40,
    )


# Per-coordinate maximizer of x sin(sqrt|x|) on [-500, 500], refined to
# machine precision; the classical 420.9687 is this rounded.
_SCHWEFEL_XSTAR = 420.96874878568275


def schwefel2() -> Problem:
    """Negated two-dimensional Schwefel function on [-500, 500]^2."""

    def fn(x):
        return -(418.9829 * 2 - float(np.sum(x * np.sin(np.sqrt(np.abs(x))))))

    opt = np.array([_SCHWEFEL_XSTAR, _SCHWEFEL_XSTAR])
    return Problem(
        name="schwefel2",
        lower=np.array([-500.0, -500.0]),
        upper=np.array([500.0, 500.0]),
        fn=fn,
        true_optimum=fn(opt),
        true_optimizer=opt,
        budget=100,
    )


def eggholder() -> Problem:
    """Negated Eggholder on [-512, 512]^2; the maximum sits on the
    domain boundary at x1 = 512."""

    def fn(x):
        x1, x2 = x
        return -(
            -(x2 + 47.0) * np.sin(np.sqrt(abs(x2 + x1 / 2.0 + 47.0)))
            - x1 * np.sin(np.sqrt(abs(x1 - x2 - 47.0)))
        )

    opt = np.array([512.0, 404.23180511239127])
    return Problem(
        name="eggholder",
        lower=np.array([-512.0, -512.0]),
        upper=np.array([512.0, 512.0]),
        fn=fn,
        true_optimum=fn(opt),
        true_optimizer=opt,
        budget=100,
    )


PROBLEMS = {
    "branin": branin,
    "hartmann6": hartmann6,
    "schwefel2": schwefel2,
    "eggholder": eggholder,
}


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}"
        ) from None


def opportunity_cost(problem: Problem, x_hat) -> float:
    """true_optimum - evaluate(x_hat), clamped at zero.

    A small negative difference (within 1e-6) is roundoff in the stored
    optimum and clamps to zero; anything more negative means the stored
    optimum is wrong and raises. NaN true_optimum yields NaN.
    """
    value = problem.evaluate(x_hat)
    if np.isnan(problem.true_optimum):
        return float("nan")
    oc = problem.true_optimum - value
    if oc < 0.0:
        if oc < -1e-6:
            raise KgoptError(
                f"evaluation {value} exceeds the stored optimum of {problem.name}"
            )
        return 0.0
    return float(oc)
