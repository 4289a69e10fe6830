"""Domain-specific exceptions for the active learning simulator."""


class ConfigurationError(Exception):
    """Raised when application or experiment configuration is invalid."""

    pass


class BusinessLogicException(Exception):
    """Base exception class for domain errors."""

    def __init__(self, message: str, error_code: str) -> None:
        self.message = message
        self.error_code = error_code
        super().__init__(message)


class RecordNotFoundException(BusinessLogicException):
    """Exception raised when a requested file, checkpoint or sample is not found."""

    def __init__(self, resource_type: str, identifier: str | int) -> None:
        message = f"{resource_type} {identifier} was not found"
        super().__init__(message, error_code="RECORD_NOT_FOUND")


class DatasetFormatException(BusinessLogicException):
    """Exception raised when a dataset file violates the CSV format."""

    def __init__(self, row: int, column: str | None, reason: str) -> None:
        self.row = row
        self.column = column
        location = f"row {row}" if column is None else f"row {row}, column {column}"
        super().__init__(f"Invalid dataset at {location}: {reason}", error_code="DATASET_FORMAT")


class ScenarioException(BusinessLogicException):
    """Exception raised when an imbalance scenario cannot be applied."""

    def __init__(self, message: str) -> None:
        super().__init__(message, error_code="SCENARIO_INVALID")


class DimensionMismatchException(BusinessLogicException):
    """Exception raised when array dimensions do not line up."""

    def __init__(self, what: str, expected: int | tuple[int, ...], actual: int | tuple[int, ...]) -> None:
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"{what}: expected {expected}, got {actual}",
            error_code="DIMENSION_MISMATCH",
        )


class DegenerateInputException(BusinessLogicException):
    """Exception raised for inputs a computation is undefined on (e.g. zero-norm vectors)."""

    def __init__(self, message: str) -> None:
        super().__init__(message, error_code="DEGENERATE_INPUT")


class TrainingDivergedException(BusinessLogicException):
    """Exception raised when a training loss stops being finite."""

    def __init__(self, stage: str, epoch: int, iteration: int | None = None) -> None:
        self.stage = stage
        self.epoch = epoch
        self.iteration = iteration
        where = f"epoch {epoch}"
        if iteration is not None:
            where = f"AL iteration {iteration}, {where}"
        super().__init__(f"{stage} diverged at {where}", error_code="TRAINING_DIVERGED")


class ProtocolException(BusinessLogicException):
    """Exception raised when the labeling protocol is violated."""

    def __init__(self, message: str) -> None:
        super().__init__(message, error_code="PROTOCOL_VIOLATION")


class AggregationException(BusinessLogicException):
    """Exception raised when run histories cannot be aggregated together."""

    def __init__(self, message: str) -> None:
        super().__init__(message, error_code="AGGREGATION_FAILED")


class RunFailedException(BusinessLogicException):
    """Exception recorded for a single failed run inside a multi-run batch."""

    def __init__(self, run_id: str, cause: Exception) -> None:
        self.run_id = run_id
        self.cause = cause
        super().__init__(f"Run {run_id} failed: {cause}", error_code="RUN_FAILED")
