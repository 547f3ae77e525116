"""Exception hierarchy shared by all wqed modules."""


class WQEDError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(WQEDError, ValueError):
    """Invalid user input: parameters, ranges, grids, file contents."""


class NumericalError(WQEDError, ArithmeticError):
    """A computation could not be carried out reliably."""


# parameter model
class NonPositiveRate(ConfigError):
    pass


class NegativeRate(ConfigError):
    pass


class UnitMismatch(ConfigError):
    pass


# analytic
class DegenerateDenominator(NumericalError):
    def __init__(self, omega):
        super().__init__(f"scattering denominator vanishes at omega={omega!r}")
        self.omega = omega


class AtomNotExcited(NumericalError):
    pass


# spectrum
class BadRange(ConfigError):
    pass


class NoExtremumFound(NumericalError):
    pass


class LevelNotCrossed(NumericalError):
    pass


class NoRobustFrequency(NumericalError):
    pass


# time domain
class BadDomain(ConfigError):
    pass


class PacketOverlapsCoupling(ConfigError):
    pass


class UnderResolved(ConfigError):
    pass


class UnstableStep(ConfigError):
    pass


class BoundaryReached(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


# reservoir
class SpanTooNarrow(ConfigError):
    pass


class TooFewOscillators(ConfigError):
    pass


class RecurrenceHorizonExceeded(ConfigError):
    pass


class NotDecaying(NumericalError):
    pass


# fitting
class ParseError(ConfigError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TooFewPoints(ConfigError):
    pass


class DegenerateFit(NumericalError):
    pass


class DidNotConverge(NumericalError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
