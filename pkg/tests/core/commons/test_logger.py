import logging
from unittest.mock import MagicMock, patch

import pytest

from deig.core.commons import logger as logger_module
from deig.core.commons.logger import get_logger, log_execution, progress_bar


@pytest.mark.unit
class TestGetLogger:
    def test_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "error")

        log = get_logger("deig.test.env_level")

        assert log.level == logging.ERROR
        assert log.propagate is False
        assert len(log.handlers) == 1

    def test_explicit_level_wins(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "error")

        assert get_logger("deig.test.explicit", level="debug").level == logging.DEBUG

    def test_unknown_level_falls_back_to_info(self):
        assert get_logger("deig.test.unknown", level="chatty").level == logging.INFO

    def test_reconfiguring_does_not_stack_handlers(self):
        get_logger("deig.test.twice")

        assert len(get_logger("deig.test.twice").handlers) == 1

    def test_file_handler(self, tmp_path):
        with patch.object(logger_module, "LOG_DIR", tmp_path):
            log = get_logger("deig.test.file", save_log_file=True)
            log.warning("written")
            for handler in log.handlers:
                handler.flush()

        assert "written" in (tmp_path / "deig.test.file.log").read_text()


@pytest.mark.unit
class TestLogExecution:
    def test_returns_result_and_logs_completion(self):
        log = MagicMock()

        @log_execution(log)
        def work(x):
            return x * 2

        assert work(21) == 42
        assert log.info.call_count == 2
        assert "finished" in log.info.call_args.args[0]

    def test_failure_is_logged_and_reraised(self):
        log = MagicMock()

        @log_execution(log)
        def work():
            raise RuntimeError("boom")

        with pytest.raises(RuntimeError):
            work()
        log.error.assert_called_once()
        assert log.error.call_args.kwargs["exc_info"] is True


@pytest.mark.unit
def test_disabled_progress_bar_still_counts():
    with progress_bar(disable=True) as progress:
        task = progress.add_task("steps", total=3)
        for _ in range(3):
            progress.advance(task)

    assert progress.tasks[0].completed == 3
