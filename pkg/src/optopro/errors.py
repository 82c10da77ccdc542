"""Exception types shared across the package."""


class OptoproError(Exception):
    """Base class for all package errors."""


class MarkerUndefinedError(OptoproError, ValueError):
    """A history marker needed by a response function is undefined."""


class DomainError(OptoproError, ValueError):
    pass


class SchemaError(OptoproError, ValueError):
    """Model and design disagree on the term list."""


class DegenerateResponseError(OptoproError, ValueError):
    pass


class DegenerateLabelsError(OptoproError, ValueError):
    pass


class DegenerateAbscissaError(OptoproError, ValueError):
    pass


class UndefinedStatisticError(OptoproError, ValueError):
    pass


class ConfigError(OptoproError, ValueError):
    pass


class StudyError(OptoproError, RuntimeError):
    pass


class DatasetFormatError(OptoproError, ValueError):
    """Malformed dataset CSV; ``line`` is 1-based and counts the header."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SingularDesignError(OptoproError, ValueError):
    """Model matrix is rank deficient."""
