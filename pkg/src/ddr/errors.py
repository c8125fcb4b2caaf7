"""Exception types shared across the package."""


class DdrError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DdrError, ValueError):
    """Array shapes are inconsistent with the requested operation."""


class NumericError(DdrError, ArithmeticError):
    """A computation produced non-finite values or diverged."""


class DomainError(DdrError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class InsufficientSampleError(DdrError, ValueError):
    """Too few observations for the requested estimator."""


class ParseError(DdrError, ValueError):
    """A file (CSV, config) could not be parsed."""
