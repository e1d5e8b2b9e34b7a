class PartitionError(ValueError):
    """Generator parameters do not define a valid partition."""


class SignSpecError(ValueError):
    """A sign sequence description could not be parsed."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class TruncationError(ArithmeticError):
    """The requested tolerance needs more explicit terms than allowed."""


class VerdictError(RuntimeError):
    """The operation needs a structure verdict the partition does not have."""


class ConfigError(ValueError):
    """Malformed partition or run configuration."""
