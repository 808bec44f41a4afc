"""Exception hierarchy shared across the package."""


class CubicHeatError(Exception):
    """Base class for all errors raised by cubicheat."""


class ConfigError(CubicHeatError, ValueError):
    """A configuration or precondition check failed."""


class SymmetryViolation(CubicHeatError, ValueError):
    """A spectrum that should describe a real field is not Hermitian."""


class BadExponent(ConfigError):
    pass


class ExponentOutOfRange(ConfigError):
    pass


class GridTooCoarse(ConfigError):
    pass


class GridMismatch(ConfigError):
    pass


class OutOfRange(ConfigError):
    pass


class NegativeTime(ConfigError):
    pass


class NonPositive(ConfigError):
    pass


class NonPositiveDelta(NonPositive):
    pass


class NegativeK(ConfigError):
    pass


class ProbeBelowTk(ConfigError):
    pass


class NTooSmall(ConfigError):
    pass


class ResolutionError(ConfigError):
    pass


class IncompatibleLambda(ConfigError):
    pass


class InsufficientSamples(CubicHeatError):
    pass


class NumericalFailure(CubicHeatError, RuntimeError):
    """The time stepper could not make progress and no blow-up was detected."""


class InternalInconsistency(CubicHeatError, RuntimeError):
    """Two independent evaluation paths disagreed."""
