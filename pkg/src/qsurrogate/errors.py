"""Exception types raised across the package."""


class QSurrogateError(Exception):
    """Base class for all package errors."""


class CapacityError(QSurrogateError, ValueError):
    pass


class BindingError(QSurrogateError, ValueError):
    pass


class DimensionError(QSurrogateError, ValueError):
    pass


class ArchitectureError(QSurrogateError, ValueError):
    pass


class ObjectiveError(QSurrogateError, ArithmeticError):
    """Objective or gradient produced a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ScalingError(QSurrogateError, ValueError):
    pass


class DatasetFormatError(QSurrogateError, ValueError):
    pass


class InfeasibleError(QSurrogateError, ValueError):
    pass


class ConfigError(QSurrogateError, ValueError):
    pass
