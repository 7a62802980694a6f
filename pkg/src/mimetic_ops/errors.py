"""Exception hierarchy shared by all modules."""


class MimeticError(Exception):
    """Base class for errors raised by :mod:`mimetic_ops`."""


class InvalidArgumentError(MimeticError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedError(MimeticError, NotImplementedError):
    """The requested construction exists in principle but is not provided."""


class UnsupportedClosureError(UnsupportedError):
    """Bounded variable-coefficient closure requested with nonzero boundary
    viscosity."""
