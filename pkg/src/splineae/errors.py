"""Exception taxonomy. Each class carries the CLI exit code it maps to."""


class SplineaeError(Exception):
    """Base class; exit code 5 = internal contract violation."""

    exit_code = 5


class ConfigError(SplineaeError):
    exit_code = 2


class DegenerateError(ConfigError):
    """Degenerate problem setup: zero orbit anchor, zero solver input, ..."""


class IngestionError(SplineaeError):
    exit_code = 3


class NumericError(SplineaeError):
    exit_code = 4


class SingularSystemError(NumericError):
    """Cholesky factorization failed even after ridge escalation."""


class DivergenceError(NumericError):
    """Training loss went non-finite."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class ContractError(SplineaeError):
    """Internal precondition violated."""


class ShapeError(ContractError):
    pass
