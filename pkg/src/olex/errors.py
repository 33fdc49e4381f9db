"""Exception hierarchy shared by all olex modules."""


class OlexError(Exception):
    """Base class for errors raised by olex."""


class ConfigurationError(OlexError, ValueError):
    """Invalid or unsupported configuration (grid scheme, body spec, options)."""


class DomainError(OlexError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateInputError(DomainError):
    """Input for which the requested quantity is undefined (e.g. all-zero samples)."""


class NumericError(OlexError, ArithmeticError):
    """Non-finite values or overflow during evaluation."""


class CapabilityError(OlexError):
    """The requested operation needs a capability the object lacks (e.g. a C1 derivative)."""


class InternalError(OlexError, RuntimeError):
    """A post-condition that should always hold was violated."""
