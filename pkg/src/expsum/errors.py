"""Exception types shared across modules; the CLI maps them to exit codes."""


class PrecisionError(ArithmeticError):
    """The digits needed to certify a result are not available."""


class ResourceGuard(RuntimeError):
    """An enumeration or iteration budget would be exceeded."""


class Finding(Exception):
    """A computed result contradicts an expected mathematical property."""
