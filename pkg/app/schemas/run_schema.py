from datetime import UTC, datetime
from enum import StrEnum

from pydantic import BaseModel, Field


class RunStatus(StrEnum):
    """Run execution status."""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


def _now_utc() -> datetime:
    """Return the current UTC timestamp with timezone awareness."""
    return datetime.now(UTC)


class RunInfo(BaseModel):
    """In-memory run metadata tracked by the run executor."""
    run_id: str = Field(description="Run identifier (strategy, scenario, seed)")
    status: RunStatus = Field(description="Current run status")
    start_time: datetime = Field(default_factory=_now_utc, description="Submission timestamp")
    end_time: datetime | None = Field(None, description="Completion timestamp")
    error: str | None = Field(None, description="Error message if the run failed")
