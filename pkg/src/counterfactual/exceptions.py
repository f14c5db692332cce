"""Exception types raised by the simulator."""


class ConfigurationError(ValueError):
    """Invalid circuit, element or parameter configuration."""


class UsageError(ValueError):
    """An operation was called with arguments that do not fit its inputs."""


class InconsistentFamilyError(ValueError):
    """Probabilities cannot be assigned to a family whose chain kets overlap."""


class WeakValueUndefinedError(ZeroDivisionError):
    """Pre- and post-selected states have zero overlap."""


class CapExceededError(RuntimeError):
    """An attempt or pair cap was exceeded during sampling.

    ``partial`` carries whatever statistics had been accumulated.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
