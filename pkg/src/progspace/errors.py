"""Exception hierarchy. The CLI maps each family to an exit code."""


class ProgspaceError(Exception):
    exit_code = 1


class ConfigError(ProgspaceError):
    exit_code = 2


class DataError(ProgspaceError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SchemaError(DataError):
    pass


class IntegrityError(DataError):
    pass


class ImputationError(DataError):
    pass


class NormalizationError(DataError):
    pass


class EmptyDesignError(DataError):
    pass


class ShapeError(DataError):
    pass


class ArtifactError(DataError):
    """A persisted artifact required by a stage is missing or unreadable."""


class NumericError(ProgspaceError):
    exit_code = 4


class DomainError(NumericError):
    pass


class RankError(NumericError):
    pass


class FitError(NumericError):
    pass


class SelectionError(NumericError):
    pass


class LabelingError(NumericError):
    pass


class StratificationError(NumericError):
    pass


class DegenerateTargetError(NumericError):
    pass
