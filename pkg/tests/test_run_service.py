"""Tests for RunService."""

import pytest
from prometheus_client import REGISTRY

from app.exceptions import ConfigurationError, RunFailedException
from app.schemas.engine_schema import ALConfig, StrategyName
from app.schemas.run_schema import RunStatus
from app.services.engine_service import ActiveLearningRunTask, ActiveLearningService
from app.services.run_service import RunProgressHandle, RunService
from tests.testing_utils import DemoRunTask, FailingRunTask


class TestRunService:
    """Test RunService functionality."""

    @pytest.fixture
    def service(self) -> RunService:
        return RunService(max_workers=2)

    def test_histories_come_back_in_submission_order(self, service: RunService):
        tasks = [DemoRunTask(f"run-{i}", macro=(0.1 * i,)) for i in range(6)]

        batch = service.run_many(tasks)

        assert batch.ok
        assert [history.run_id for history in batch.histories] == [f"run-{i}" for i in range(6)]

    def test_failure_does_not_abort_siblings(self, service: RunService):
        tasks = [DemoRunTask("run-a"), FailingRunTask("run-b"), DemoRunTask("run-c")]

        batch = service.run_many(tasks)

        assert not batch.ok
        assert [history.run_id for history in batch.histories] == ["run-a", "run-c"]
        assert len(batch.failures) == 1
        failure = batch.failures[0]
        assert isinstance(failure, RunFailedException)
        assert failure.run_id == "run-b"
        assert str(failure.cause) == "boom"
        assert failure.error_code == "RUN_FAILED"

    def test_statuses_are_tracked(self, service: RunService):
        service.run_many([DemoRunTask("run-a"), FailingRunTask("run-b")])

        completed = service.get_run_status("run-a")
        failed = service.get_run_status("run-b")
        assert completed is not None and completed.status == RunStatus.COMPLETED
        assert completed.end_time is not None
        assert failed is not None and failed.status == RunStatus.FAILED
        assert failed.error == "boom"
        assert {info.run_id for info in service.list_runs()} == {"run-a", "run-b"}

    def test_get_run_status_nonexistent(self, service: RunService):
        assert service.get_run_status("nonexistent-run") is None

    def test_failure_counter_increments(self, service: RunService):
        before = REGISTRY.get_sample_value("al_run_failures_total") or 0.0

        service.run_many([FailingRunTask("run-x"), FailingRunTask("run-y")])

        assert REGISTRY.get_sample_value("al_run_failures_total") - before == 2

    def test_duplicate_run_ids_rejected(self, service: RunService):
        with pytest.raises(ConfigurationError, match="unique"):
            service.run_many([DemoRunTask("same"), DemoRunTask("same")])

    @pytest.mark.parametrize("jobs", [0, -1])
    def test_invalid_job_count_rejected(self, service: RunService, jobs: int):
        with pytest.raises(ConfigurationError):
            service.run_many([DemoRunTask("run")], jobs=jobs)

    def test_invalid_worker_count_rejected(self):
        with pytest.raises(ConfigurationError):
            RunService(max_workers=0)

    def test_empty_batch(self, service: RunService):
        batch = service.run_many([])

        assert batch.ok
        assert batch.histories == []


class TestRunProgressHandle:
    """Test the logging progress handle."""

    def test_progress_never_moves_backwards(self):
        handle = RunProgressHandle("run")

        handle.send_progress("half", 0.5)
        handle.send_progress_value(0.2)
        handle.send_progress_text("still going")

        assert handle.progress == 0.5
        assert handle.progress_text == "still going"


class TestParallelRuns:
    """Test that parallel execution matches serial execution."""

    @pytest.fixture
    def tasks_factory(self, al_service: ActiveLearningService, small_splits, fast_al_config: ALConfig):
        pool, val, test = small_splits
        config = fast_al_config.model_copy(update={"strategy": StrategyName.RANDOM})

        def make_tasks() -> list[ActiveLearningRunTask]:
            return [
                ActiveLearningRunTask(
                    f"random__scenario_1__seed{seed}",
                    al_service,
                    pool,
                    val,
                    test,
                    config.model_copy(update={"seed": seed}),
                    scenario="scenario_1",
                )
                for seed in range(5)
            ]

        return make_tasks

    def test_parallel_and_serial_runs_agree(self, tasks_factory):
        serial = RunService(max_workers=1).run_many(tasks_factory())
        parallel = RunService(max_workers=4).run_many(tasks_factory())

        assert serial.ok and parallel.ok
        assert [h.model_dump() for h in serial.histories] == [h.model_dump() for h in parallel.histories]

    def test_seeds_draw_different_initial_sets(self, tasks_factory, al_service: ActiveLearningService):
        initial_sets = {
            tuple(sorted(al_service.initial_labeled_ids(task.pool, task.config))) for task in tasks_factory()
        }

        assert len(initial_sets) == 5
