"""Exception types. Data/config problems and numerical failures are kept
apart so the CLI can map them to distinct exit codes."""


class PenregError(Exception):
    pass


class DataError(PenregError, ValueError):
    """Bad input data or bad arguments describing it."""


class HeaderMissing(DataError):
    def __init__(self, column):
        super().__init__(f"CSV header lacks mapped column {column!r}")
        self.column = column


class DataQualityError(DataError):
    pass


class EmptyInput(DataError):
    pass


class ConstantColumn(DataError):
    def __init__(self, name):
        super().__init__(f"column {name!r} is constant and cannot be standardized")
        self.name = name


class DegenerateSplit(DataError):
    pass


class InvalidK(DataError):
    pass


class NotStandardized(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class DegenerateLabels(DataError):
    pass


class ConfigError(PenregError, ValueError):
    pass


class NumericalError(PenregError, ArithmeticError):
    pass


class SingularSystem(NumericalError):
    pass


class SeparationWarning(UserWarning):
    """Logistic coefficients diverging: the classes are (quasi-)separable."""
