"""Exception types shared across the package."""


class SemkgeError(Exception):
    """Base class for all package-specific errors."""


class ParseError(SemkgeError):
    """A data file could not be parsed.

    Carries the offending line number when one is known.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DataError(SemkgeError):
    """Input data violates a structural requirement (vocabulary mismatch,
    empty split, unknown entity, ...)."""


class ConfigError(SemkgeError):
    """An experiment plan or generator spec is invalid or infeasible."""


class SamplingError(SemkgeError):
    """No valid sample exists (e.g. every corruption of a triple is a
    known positive)."""


class NumericalError(SemkgeError):
    """Training produced a non-finite loss; carries diagnostic context."""
