"""Exception hierarchy shared by the library and the command line."""


class HarsanyiError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(HarsanyiError, ValueError):
    """An argument violates an operation's documented precondition."""


class RangeError(HarsanyiError, OverflowError):
    """A quantity falls outside the supported exact range."""


class FormatError(HarsanyiError, ValueError):
    """A file does not conform to one of the harsanyi-*/1 formats."""


class DegenerateGameError(HarsanyiError):
    """The game has identically zero utilities, so no threshold can be chosen."""


class AssumptionViolation(HarsanyiError):
    """A quantity required by the sparsity theorems has the wrong sign."""


class OracleError(HarsanyiError):
    """Base class for failures while querying a value oracle.

    ``mask`` names the coalition that was being evaluated, when known.
    """

    def __init__(self, message, mask=None):
        if mask is not None:
            message = f"{message} (mask={mask})"
        super().__init__(message)
        self.mask = mask


class OracleProcessError(OracleError):
    """The external model process died, refused input or could not start."""


class OracleProtocolError(OracleError):
    """The external model process sent a malformed or out-of-order reply."""


class NonFiniteValueError(OracleError):
    """An oracle produced NaN or infinity."""
