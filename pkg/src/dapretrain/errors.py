"""Exception hierarchy.

Every error carries a short ``category`` string; the CLI prints it as the
first token of its one-line failure message.
"""


class DAError(Exception):
    category = "error"


class DomainError(DAError, ValueError):
    category = "domain"


class InputDomainError(DomainError):
    category = "input-domain"


class DimensionError(DAError, ValueError):
    category = "dimension"


class EnumerationLimitError(DAError, ValueError):
    category = "enumeration-limit"


class ScheduleError(DAError, ValueError):
    category = "schedule-validity"


class InfeasibleError(DomainError):
    category = "infeasible"


class PlanError(DAError, ValueError):
    category = "plan"


class FormatError(DAError, ValueError):
    """Malformed binary input; ``offset`` is the byte position of the fault."""

    category = "format"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(DAError, ValueError):
    category = "config"


class UsageError(ConfigError):
    """Bad command line."""

    category = "usage"
