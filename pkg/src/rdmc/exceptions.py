from typing import Any, Mapping


class EmptyColumnError(ValueError):
    """Raised when a column has no observed entries but the operation needs at least one."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f'Column {column} has no observed entries')


class InvalidRatingError(ValueError):
    """Raised when a stored value is not one of its column's rating categories."""

    def __init__(self, row: int, column: int, value: Any):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f'Value {value!r} at cell ({row}, {column}) is not a category of column {column}')


class DuplicateEntryError(ValueError):
    """Raised when the same (row, column) pair is given more than once."""

    def __init__(self, row: int, column: int):
        self.row = row
        self.column = column
        super().__init__(f'Cell ({row}, {column}) is given more than once')


class OffGridError(ValueError):
    """Raised when a completed cell does not lie on its column's (centered) category grid."""

    def __init__(self, row: int, column: int, value: float):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f'Value {value!r} at cell ({row}, {column}) is not on the category grid of column '
            f'{column}')


class NonFiniteInputError(ValueError):
    """Raised when a matrix handed to an SVD contains NaN or infinite cells."""

    def __init__(self, row: int, column: int, value: float):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f'Non-finite value {value!r} at cell ({row}, {column})')


class SolverDivergedError(ArithmeticError):
    """
    Raised when the ADMM objective becomes non-finite.

    The ``state`` attribute contains a summary of the iterate at the time of failure.
    """

    def __init__(self, iteration: int, state: Mapping[str, Any]):
        self.iteration = iteration
        self.state = dict(state)
        details = ', '.join(f'{key}={value}' for key, value in self.state.items())
        super().__init__(f'Objective became non-finite at iteration {iteration} ({details})')


class TargetSelectionError(LookupError):
    """Raised when no column qualifies as the target of an attack."""


class AttackError(ValueError):
    """Raised when an attack profile cannot be forged with the requested specification."""


class DataFormatError(ValueError):
    """Raised when an input file cannot be parsed into a rating matrix."""

    def __init__(self, path: Any, line: int, reason: str):
        self.path = path
        self.line = line
        self.reason = reason
        location = f'{path}, line {line}' if line else str(path)
        super().__init__(f'{location}: {reason}')


class ConfigurationError(ValueError):
    """Raised when an experiment configuration is incomplete or contains unknown keys."""


class ExperimentAbortedError(RuntimeError):
    """Raised when too many replications of an experiment have failed."""

    def __init__(self, failed: int, total: int):
        self.failed = failed
        self.total = total
        super().__init__(
            f'{failed} of {total} replication jobs failed; aborting the experiment')


class SerializationError(Exception):
    """Raised when a serializer fails to serialize the given object."""


class DeserializationError(Exception):
    """Raised when a serializer fails to deserialize the given object."""
