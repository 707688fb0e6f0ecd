"""Exception taxonomy, shared by the library and the CLI exit-code mapping."""


class HarnackLabError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(HarnackLabError, ValueError):
    """An operation was called with inputs violating its contract (CLI exit 2)."""


class ClippedDomainError(PreconditionError):
    """A domain touches the truncation halo of a generated graph (CLI exit 2)."""


class ResidualError(HarnackLabError, ArithmeticError):
    """A numerical residual exceeded its documented tolerance (CLI exit 3)."""


class CapExceededError(HarnackLabError, RuntimeError):
    """A hard step or time cap was hit before the stopping rule fired (CLI exit 4)."""
