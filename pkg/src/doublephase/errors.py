"""Exception types raised by the toolkit."""


class DomainError(ValueError):
    """A point, cube or ball lies outside the region where data is defined."""


class InputError(ValueError):
    """Malformed input: non-finite samples, mismatched grids, bad shapes."""


class PreconditionError(ValueError):
    """A documented precondition of an estimator is violated."""


class BracketError(RuntimeError):
    """A grid search could not bracket its maximiser."""


class ConfigError(ValueError):
    """A configuration file could not be parsed or validated."""

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
