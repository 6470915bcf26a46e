"""Exception hierarchy shared by all modules."""


class PqvrfError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(PqvrfError, ValueError):
    """Malformed argument: wrong length, out-of-range coefficient, bad encoding."""


class ParameterError(PqvrfError, ValueError):
    """Parameter set violates its invariants or a precondition on widths."""


class DegenerateBasisError(PqvrfError):
    """Gram-Schmidt hit a (numerically) dependent row."""


class UnsolvableError(PqvrfError):
    """NTRU equation has no solution for the given (f, g); resample."""


class GenerationError(PqvrfError):
    """Retry budget exhausted during key or trapdoor generation."""


class IntegrityError(PqvrfError):
    """Authentication tag, MAC or binding check failed."""


class MembershipError(PqvrfError):
    """Signer identity is not part of the ring."""


class PreconditionError(PqvrfError):
    """Operation invoked in a state or on data that does not meet its precondition."""


class RejectedError(PqvrfError):
    """The simulated chain refused a transaction."""

    def __init__(self, message, code="rejected"):
        super().__init__(message)
        self.code = code
