"""Exception types shared across the package."""


class ConelabError(Exception):
    """Base class for all conelab errors."""


class NonPositiveEntryError(ConelabError, ValueError):
    """A matrix entry is zero, negative, or not finite."""


class BadProbabilityVectorError(ConelabError, ValueError):
    """Probabilities are not a strictly positive vector summing to one."""


class DimensionMismatchError(ConelabError, ValueError):
    """Objects with incompatible dimensions were combined."""


class UnsupportedDimensionError(ConelabError, ValueError):
    """Simplex grids only cover d = 2 and d = 3."""


class IterationBudgetExceededError(ConelabError, RuntimeError):
    """A certified iteration did not reach its tolerance within the cap."""


class NoConvergenceError(ConelabError, RuntimeError):
    """Power iteration did not converge within the iteration cap."""


class NegativeWeightError(ConelabError, RuntimeError):
    """Numerical breakdown: a measure iterate acquired negative mass."""


class ConditionViolationError(ConelabError, ValueError):
    """The ensemble does not satisfy the hypotheses a routine requires."""


class QOutOfRangeError(ConelabError, ValueError):
    """A Legendre target lies outside the range of the tabulated derivative."""


class DerivativeUnstableError(ConelabError, RuntimeError):
    """Higher derivatives cannot be extracted (vanishing curvature)."""


class ConfigError(ConelabError, ValueError):
    """A run configuration failed schema validation."""


class IntervalTooNarrowError(ConelabError, ValueError):
    """A local-limit window is too narrow for the requested path count."""


class WrongTiltWarning(UserWarning):
    """The importance-sampling indicator fires on almost none or almost all paths."""


class WeightDegeneracyWarning(UserWarning):
    """Effective sample size of an importance-weighted batch collapsed."""


class NonConvexCurveWarning(UserWarning):
    """Sampled log-eigenvalue curve has a negative second difference."""
