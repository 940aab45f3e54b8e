"""
Error hierarchy shared by the library and the command line.
Every error carries the process exit code the CLI reports for it.
"""


class NCFError(Exception):
    exit_code = 1


class ConfigError(NCFError):
    exit_code = 2

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class UnsupportedCombinationError(ConfigError):
    pass


class DataError(NCFError):
    exit_code = 2


class LinkParseError(DataError):
    def __init__(self, path, line_no: int, line: str, reason: str = "expected 'user<TAB>item'"):
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {reason}, got {line!r}")


class IdBoundsError(DataError):
    pass


class EmptyGraphError(DataError):
    pass


class MissingFeaturesError(DataError):
    pass


class UndefinedWeightError(DataError):
    pass


class NumericalError(NCFError):
    exit_code = 3


class DivergenceError(NumericalError):
    pass


class GradcheckFailure(NumericalError):
    pass


class ShapeMismatchError(NCFError):
    exit_code = 3


class DegenerateBatchWarning(UserWarning):
    """A batch produced a positive with no negative partners."""
