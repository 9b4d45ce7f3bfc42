"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class FourvolError(Exception):
    exit_code = 1


class ConfigurationError(FourvolError, ValueError):
    exit_code = 2


class TuningError(ConfigurationError):
    """Tuning parameters violate a frequency-availability or rate constraint."""


class DataError(FourvolError, ValueError):
    exit_code = 3


class SamplingError(DataError):
    pass


class DomainError(FourvolError, ArithmeticError):
    """A functional was evaluated outside its domain (e.g. singular matrix)."""

    exit_code = 4

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class EstimationError(FourvolError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class InferenceError(FourvolError, ArithmeticError):
    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
