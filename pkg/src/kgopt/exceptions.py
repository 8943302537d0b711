"""Exception types raised across the package.

Everything derives from KgoptError so callers can catch the package's
failures with one handler while still distinguishing model problems
(recoverable by changing hyperparameters) from evaluation problems
(external to the model).
"""


class KgoptError(Exception):
    """Base class for all package-specific errors."""


class IllConditionedError(KgoptError):
    """Correlation matrix stayed non-positive-definite after the jitter
    schedule was exhausted, or the trend system is singular."""


class InsufficientDataError(KgoptError):
    """Fewer observations than trend basis functions."""


class UndefinedGradientError(KgoptError):
    """Policy gradient requested where it does not exist (zero
    predictive spread)."""


class SamplingStalledError(KgoptError):
    """Slice sampler could not place a new point within its retry
    budget."""


class AcquisitionFailedError(KgoptError):
    """Candidate generation or refinement produced no usable point."""


class EvaluationFailedError(KgoptError):
    """Objective evaluation failed (bad subprocess exit, unparseable
    output, or timeout)."""
