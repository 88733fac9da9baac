"""Exception types shared across the package."""


class SealError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SealError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UnsupportedStateError(SealError, TypeError):
    """A photon state of the wrong kind reached an operation."""


class ConfigError(SealError, ValueError):
    """A component or scenario configuration violates an invariant."""


class PreconditionError(SealError, ValueError):
    """Input data does not satisfy an operation's precondition."""


class InsufficientDataError(SealError):
    """Too few counts to form a statistically meaningful estimate."""


class UnknownLinkError(SealError, KeyError):
    """A report referred to a link that is absent or not sealed."""
