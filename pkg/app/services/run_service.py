import logging
import threading
import traceback
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import UTC, datetime

from prometheus_client import Counter

from app.exceptions import ConfigurationError, RunFailedException
from app.schemas.engine_schema import RunHistory
from app.schemas.run_schema import RunInfo, RunStatus
from app.services.base_task import BaseRunTask

# Run failure metric -- owned by RunService.
AL_RUN_FAILURES_TOTAL = Counter(
    "al_run_failures_total",
    "Active learning runs that raised instead of returning a history",
)

logger = logging.getLogger(__name__)


class RunProgressHandle:
    """ProgressHandle implementation that reports through the logger."""

    def __init__(self, run_id: str) -> None:
        self.run_id = run_id
        self.progress = 0.0
        self.progress_text = ""

    def send_progress_text(self, text: str) -> None:
        self.send_progress(text, self.progress)

    def send_progress_value(self, value: float) -> None:
        self.send_progress(self.progress_text, value)

    def send_progress(self, text: str, value: float) -> None:
        self.progress_text = text
        if value > self.progress:
            self.progress = value
        logger.debug(f"Run {self.run_id} progress {self.progress:.0%}: {text}")


@dataclass
class RunBatch:
    """Results of ``run_many`` in submission order, failures kept apart."""

    histories: list[RunHistory] = field(default_factory=list)
    failures: list[RunFailedException] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


class RunService:
    """Service executing independent runs on a bounded thread pool."""

    def __init__(self, max_workers: int = 1) -> None:
        """Initialize RunService.

        Args:
            max_workers: Default number of concurrently executing runs
        """
        if max_workers < 1:
            raise ConfigurationError(f"max_workers must be at least 1 (got {max_workers})")
        self.max_workers = max_workers
        self._runs: dict[str, RunInfo] = {}
        self._lock = threading.RLock()

        logger.info(f"RunService initialized: max_workers={max_workers}")

    def run_many(self, tasks: Sequence[BaseRunTask], jobs: int | None = None) -> RunBatch:
        """Execute every task; a failing run never aborts its siblings.

        Args:
            tasks: Runs to execute, each with a unique run id
            jobs: Worker count for this batch (defaults to max_workers)

        Returns:
            RunBatch with successful histories and failures, each in submission order

        Raises:
            ConfigurationError: If run ids repeat or jobs < 1
        """
        run_ids = [task.run_id for task in tasks]
        if len(set(run_ids)) != len(run_ids):
            raise ConfigurationError(f"Run ids must be unique: {run_ids}")
        workers = jobs if jobs is not None else self.max_workers
        if workers < 1:
            raise ConfigurationError(f"jobs must be at least 1 (got {workers})")

        with self._lock:
            for task in tasks:
                self._runs[task.run_id] = RunInfo(run_id=task.run_id, status=RunStatus.PENDING)

        logger.info(f"Starting {len(tasks)} runs on {workers} workers")
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(self._execute_run, task) for task in tasks]
            outcomes = [future.result() for future in futures]

        batch = RunBatch()
        for outcome in outcomes:
            if isinstance(outcome, RunFailedException):
                batch.failures.append(outcome)
            else:
                batch.histories.append(outcome)

        logger.info(f"Finished {len(tasks)} runs: {len(batch.histories)} completed, {len(batch.failures)} failed")
        return batch

    def get_run_status(self, run_id: str) -> RunInfo | None:
        """Get current status of a run."""
        with self._lock:
            return self._runs.get(run_id)

    def list_runs(self) -> list[RunInfo]:
        with self._lock:
            return list(self._runs.values())

    def _execute_run(self, task: BaseRunTask) -> RunHistory | RunFailedException:
        """Execute a run in a worker thread."""
        run_id = task.run_id
        try:
            with self._lock:
                self._runs[run_id].status = RunStatus.RUNNING

            history = task.execute(RunProgressHandle(run_id))

            with self._lock:
                info = self._runs[run_id]
                info.status = RunStatus.COMPLETED
                info.end_time = datetime.now(UTC)

            logger.info(f"Run {run_id} completed successfully")
            return history

        except Exception as e:
            error_msg = str(e)
            logger.error(f"Run {run_id} failed: {error_msg}")
            logger.debug(f"Run {run_id} error traceback: {traceback.format_exc()}")
            AL_RUN_FAILURES_TOTAL.inc()

            with self._lock:
                info = self._runs[run_id]
                info.status = RunStatus.FAILED
                info.end_time = datetime.now(UTC)
                info.error = error_msg

            return RunFailedException(run_id, e)
