"""Exception hierarchy shared by all modules."""


class WsmaError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(WsmaError, ValueError):
    """Array shapes or counts are inconsistent."""


class NotPositiveDefiniteError(WsmaError, ValueError):
    """Cholesky factorization failed."""


class ConvergenceError(WsmaError, RuntimeError):
    """An iterative optimizer did not reach its tolerance.

    ``best_value`` holds the best objective value reached.
    """

    def __init__(self, message, best_value=None, best=None):
        super().__init__(message)
        self.best_value = best_value
        self.best = best


class DivergenceError(WsmaError, RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, message, epoch):
        super().__init__(message)
        self.epoch = epoch


class StaleCacheError(WsmaError, RuntimeError):
    """A backward pass was requested with a cache from another forward."""


class ConfigError(WsmaError, ValueError):
    """Invalid experiment configuration.

    ``fields`` lists the offending configuration keys.
    """

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)


class CheckpointError(WsmaError, ValueError):
    """Unreadable, corrupt or incompatible checkpoint file."""


class FormatError(WsmaError, ValueError):
    """Malformed sequence-set text file."""
