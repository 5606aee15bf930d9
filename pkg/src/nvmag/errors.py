"""Exception and warning types raised by nvmag."""


class NvmagError(Exception):
    """Base class for all nvmag errors."""


class InvalidArgumentError(NvmagError, ValueError):
    pass


class SingularParameterError(NvmagError, ValueError):
    """A parameter value makes the requested quantity undefined (e.g. zero slope)."""


class FitFailureError(NvmagError, RuntimeError):
    pass


class NoSolutionError(NvmagError, ValueError):
    pass


class ConfigError(NvmagError, ValueError):
    pass


class FitWarning(UserWarning):
    pass


class AnalysisWarning(UserWarning):
    pass
