"""Exception types raised across the package."""


class LdpathError(ValueError):
    """Base class for all input/contract errors."""


class NotCentered(LdpathError):
    pass


class OutOfDomain(LdpathError):
    pass


class UnsortedInput(LdpathError):
    pass


class NegativeTime(LdpathError):
    pass


class NonzeroOrigin(LdpathError):
    pass


class WindowMismatch(LdpathError):
    pass


class BadPartition(LdpathError):
    pass


class WrongKind(LdpathError):
    pass


class ConfigError(LdpathError):
    pass
