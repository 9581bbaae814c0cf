"""Exception types shared across the package.

Every contract violation raises a subclass of :class:`VoxsimError` so callers
(and the HTTP service) can distinguish domain errors from programming bugs.
"""


class VoxsimError(Exception):
    """Base class for all voxsim errors."""


class DomainError(VoxsimError):
    """A scalar argument lies outside its allowed domain."""


class DimensionError(VoxsimError):
    """An array argument has the wrong shape or length."""


class ConfigError(VoxsimError):
    """A configuration object could not be constructed consistently."""


class TemplateViolation(VoxsimError):
    """A tagged token stream breaks the interleaving template.

    ``position`` is the first stream index whose tag is inconsistent.
    """

    def __init__(self, message: str, position: int):
        super().__init__(message)
        self.position = position


class ProtocolError(VoxsimError):
    """The incremental decoder was driven out of order (e.g. feed after flush)."""


class BudgetError(VoxsimError):
    """A mixture plan cannot be satisfied within the token budget."""
