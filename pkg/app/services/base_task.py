from abc import ABC, abstractmethod
from typing import Protocol

from app.schemas.engine_schema import RunHistory


class ProgressHandle(Protocol):
    """Interface for reporting the progress of a long-running run."""

    def send_progress_text(self, text: str) -> None:
        """Report a text progress update."""
        ...

    def send_progress_value(self, value: float) -> None:
        """Report a progress value update (0.0 to 1.0)."""
        ...

    def send_progress(self, text: str, value: float) -> None:
        """Report both text and progress value."""
        ...


class BaseRunTask(ABC):
    """One independent unit of work executed by RunService."""

    def __init__(self, run_id: str) -> None:
        self.run_id = run_id

    @abstractmethod
    def execute(self, progress_handle: ProgressHandle) -> RunHistory:
        """
        Execute the run with progress reporting.

        Args:
            progress_handle: Interface for reporting progress

        Returns:
            RunHistory: Iteration records of the finished run

        Raises:
            Exception: Any run-specific exception; RunService records it as a failure
        """
        pass
