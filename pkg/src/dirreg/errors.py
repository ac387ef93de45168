"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) so the
CLI can surface failures in ``fit.json`` without string matching.
"""


class DirRegError(Exception):
    """Base class for all package errors."""

    @property
    def code(self):
        return type(self).__name__


class DataError(DirRegError, ValueError):
    pass


class NegativeEntry(DataError):
    pass


class ZeroRow(DataError):
    pass


class DimensionError(DataError):
    pass


class DimensionMismatch(DirRegError, ValueError):
    pass


class NonPositiveAlpha(DirRegError, ValueError):
    pass


class BoundaryY(DirRegError, ValueError):
    pass


class NonPositiveArgument(DirRegError, ValueError):
    pass


class FormulaSyntaxError(DirRegError, SyntaxError):
    """Raised for malformed formulas; ``position`` is the 0-based offset."""

    def __init__(self, message, text="", position=0):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.text = text
        self.position = position


class UnknownColumn(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SingleLevelFactor(DataError):
    pass


class MissingValue(DataError):
    pass


class NonFiniteInput(DirRegError, ValueError):
    pass


class OverflowToInfinity(DirRegError, OverflowError):
    pass


class NonPositiveTheta(DirRegError, ValueError):
    pass


class NonFiniteParameters(DirRegError, ValueError):
    pass


class DegenerateData(DataError):
    pass


class MissingStdErrors(DirRegError, ValueError):
    pass


class InsufficientDraws(DirRegError, ValueError):
    pass


class AllChainsDiverged(DirRegError, RuntimeError):
    pass


class NonFiniteInit(DirRegError, RuntimeError):
    pass


class NonPositiveEntry(DirRegError, ValueError):
    pass


class InsufficientSamples(DirRegError, ValueError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NoResponseColumns(DataError):
    pass


class AllRowsDropped(DataError):
    pass


class MissingArtifacts(DirRegError, FileNotFoundError):
    pass


class NonFiniteGradient(DirRegError, FloatingPointError):
    pass


class ConfigError(DirRegError, ValueError):
    pass
