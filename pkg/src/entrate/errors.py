"""Exception types raised across the package."""


class EntrateError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(EntrateError):
    """Bad configuration file or CLI argument (exit code 2)."""


# constraint construction
class EmptyAlphabet(EntrateError):
    pass


class ForeignSymbol(EntrateError):
    pass


class OrderTooHigh(EntrateError):
    """Forbidden list needs memory beyond one symbol; out of scope here."""


class Degenerate(EntrateError):
    """No bi-infinite sequence survives the forbidden list."""


class NotMixing(EntrateError):
    pass


# Markov inputs
class NotStochastic(EntrateError):
    pass


class SupportViolation(EntrateError):
    pass


class NotPrimitive(EntrateError):
    pass


class ZeroMarginal(EntrateError):
    pass


class InfeasibleDelta(EntrateError):
    pass


# channels
class BadParameter(EntrateError):
    pass


class RowSumNotOne(EntrateError):
    pass


class NoiselessViolation(EntrateError):
    pass


class NotInjective(EntrateError):
    pass


# series arithmetic
class DivByZeroSeries(EntrateError):
    pass


class OrderUnderflow(EntrateError):
    """Division would produce a negative leading power."""


class DimensionMismatch(EntrateError):
    pass


# output process
class AlphabetMismatch(EntrateError):
    pass


class UnknownSymbol(EntrateError):
    pass


class ZeroHistory(EntrateError):
    pass


class ZeroMass(EntrateError):
    pass


class BudgetExceeded(EntrateError):
    """Enumeration budget exceeded (exit code 3)."""


class NotCleanWord(EntrateError):
    """Word has positive noise order, so the dominance check does not apply."""


class WordTooShort(EntrateError):
    pass


class AssumptionViolated(EntrateError):
    """Channel has identically-zero kernel entries; the check needs them nonzero."""


class PreconditionFailed(EntrateError):
    pass


# entropy / expansion
class NonpositiveEps(EntrateError):
    pass


class GridTooCoarse(EntrateError):
    pass


# optimization
class StepUnderflow(EntrateError):
    """Cannot fit a finite-difference stencil inside the feasible margin."""
