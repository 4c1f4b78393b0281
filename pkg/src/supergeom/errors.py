"""Exception types shared across the package."""


class SuperGeomError(Exception):
    """Base class for all package errors."""


class ParseError(SuperGeomError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class SpecFileError(SuperGeomError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParityError(SuperGeomError):
    pass


class ChartError(SuperGeomError):
    pass


class RelationError(SuperGeomError):
    pass


class SamplingError(SuperGeomError):
    pass


class SingularMetricError(SuperGeomError):
    pass


class UnsupportedDegreeError(SuperGeomError):
    pass
