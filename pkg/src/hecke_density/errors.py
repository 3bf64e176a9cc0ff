"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`HeckeDensityError`; the CLI maps configuration errors to exit
status 2 and everything else to 1.
"""


class HeckeDensityError(Exception):
    """Base class for all package errors."""


class ConfigurationError(HeckeDensityError, ValueError):
    """Invalid user input (field, frequency, tolerances)."""


class RejectedField(ConfigurationError):
    pass


class BadFrequency(ConfigurationError):
    pass


class ZeroElement(HeckeDensityError, ValueError):
    pass


class DegenerateLattice(HeckeDensityError, ValueError):
    pass


class SieveRangeError(HeckeDensityError, ValueError):
    """A number lies beyond the precomputed sieve."""


class SieveTooSmall(SieveRangeError):
    pass


class CapacityExceeded(HeckeDensityError, MemoryError):
    pass


class OutOfRange(HeckeDensityError, IndexError):
    pass


class GeneratorSearchFailed(HeckeDensityError, RuntimeError):
    pass


class PoleHit(HeckeDensityError, ZeroDivisionError):
    pass


class InsufficientTerms(HeckeDensityError, RuntimeError):
    pass


class LowerHalfPlane(HeckeDensityError, ValueError):
    pass


class TailTooLarge(HeckeDensityError, RuntimeError):
    pass


class ConsistencyFailure(HeckeDensityError, RuntimeError):
    pass


class TruncationTooCoarse(HeckeDensityError, ValueError):
    pass
