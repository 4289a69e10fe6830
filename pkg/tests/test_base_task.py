"""Tests for BaseRunTask abstract class."""

from unittest.mock import Mock

import pytest

from app.services.base_task import BaseRunTask, ProgressHandle
from tests.testing_utils import DemoRunTask, FailingRunTask


class TestBaseRunTask:
    """Test BaseRunTask abstract class functionality."""

    def test_abstract_class_cannot_be_instantiated(self):
        with pytest.raises(TypeError):
            BaseRunTask("run")  # type: ignore[abstract]

    def test_concrete_task_keeps_its_run_id(self):
        task = DemoRunTask("run-1")
        assert task.run_id == "run-1"

    def test_task_execute_with_progress_handle(self):
        progress_handle = Mock(spec=ProgressHandle)

        history = DemoRunTask("run-1", macro=(0.1, 0.3)).execute(progress_handle)

        assert history.run_id == "run-1"
        assert [record.macro_f1 for record in history.records] == [0.1, 0.3]
        progress_handle.send_progress.assert_called_once_with("run-1: done", 1.0)

    def test_task_execute_with_exception(self):
        with pytest.raises(RuntimeError, match="boom"):
            FailingRunTask("run-2").execute(Mock(spec=ProgressHandle))


class TestProgressHandle:
    """Test ProgressHandle protocol compliance."""

    def test_progress_handle_protocol(self):
        progress_handle = Mock(spec=ProgressHandle)
        progress_handle.send_progress_text("test")
        progress_handle.send_progress_value(0.5)
        progress_handle.send_progress("test", 0.5)
        progress_handle.send_progress_text.assert_called_with("test")
        progress_handle.send_progress_value.assert_called_with(0.5)
