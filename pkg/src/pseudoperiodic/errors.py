"""Exception hierarchy shared by every stage of the pipeline.

Each class carries an ``exit_code`` so the CLI can map failures to distinct
process exit statuses without a lookup table.
"""


class PipelineError(Exception):
    exit_code = 1


class ContractError(PipelineError, ValueError):
    """A precondition of an operation was violated by the caller."""

    exit_code = 2


class ParseError(PipelineError, ValueError):
    exit_code = 3

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderingError(PipelineError, ValueError):
    exit_code = 3


class ValueRangeError(PipelineError, ValueError):
    exit_code = 3


class GeometryError(PipelineError, ValueError):
    exit_code = 4


class DegenerateTriangleError(GeometryError):
    pass


class ParameterError(PipelineError, ValueError):
    exit_code = 5


class UndefinedSilhouetteError(PipelineError, ValueError):
    exit_code = 5


class InsufficientPeriodsError(PipelineError):
    exit_code = 6


class NoLabelsError(PipelineError):
    exit_code = 6


class TrainingError(PipelineError):
    exit_code = 7


class DependencyError(PipelineError):
    """A CLI stage was invoked before the stage that produces its input."""

    exit_code = 8
