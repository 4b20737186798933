"""Exception hierarchy shared by every module."""


class CSSError(Exception):
    """Base class for errors raised by csslab."""


class ContractViolation(CSSError, ValueError):
    """A precondition on the arguments was not met."""


class CorruptedStateError(CSSError, ValueError):
    """A field contains NaN or Inf values."""


class DomainError(CSSError, ArithmeticError):
    """The requested quantity does not exist for this input."""
