"""Unit tests for logging configuration."""

from unittest.mock import MagicMock

import orjson

from app.core.logging import LoggerMixin, get_logger, setup_logging


def _settings(level: str, fmt: str) -> MagicMock:
    mock_settings = MagicMock()
    mock_settings.app.log_level = level
    mock_settings.app.log_format = fmt
    return mock_settings


class TestLoggingSetup:
    """Test logging setup functions."""

    def test_get_logger_returns_structlog_logger(self):
        """Test get_logger returns a structured logger."""
        assert get_logger("test_module") is not None

    def test_json_format_writes_to_stderr(self, capsys):
        """Test JSON records go to stderr with event and level."""
        setup_logging(_settings("INFO", "json"))
        get_logger("resonance_lab.test").info("sweep_started", n_h=4)
        captured = capsys.readouterr()
        assert captured.out == ""
        record = orjson.loads(captured.err.strip().splitlines()[-1])
        assert record["event"] == "sweep_started"
        assert record["level"] == "info"
        assert record["n_h"] == 4
        assert "timestamp" in record

    def test_level_filters_records(self, capsys):
        """Test records below the configured level are dropped."""
        setup_logging(_settings("WARNING", "json"))
        logger = get_logger("resonance_lab.test")
        logger.info("quiet")
        logger.warning("loud")
        lines = capsys.readouterr().err.strip().splitlines()
        assert [orjson.loads(line)["event"] for line in lines] == ["loud"]

    def test_console_format(self, capsys):
        """Test console format renders the event name."""
        setup_logging(_settings("debug", "console"))
        get_logger("resonance_lab.test").debug("phase_integrated", k=1.5)
        err = capsys.readouterr().err
        assert "phase_integrated" in err
        assert "k=1.5" in err

    def test_unknown_level_falls_back_to_info(self, capsys):
        """Test an unknown level name logs at INFO."""
        setup_logging(_settings("CHATTY", "json"))
        logger = get_logger("resonance_lab.test")
        logger.debug("hidden")
        logger.info("shown")
        lines = capsys.readouterr().err.strip().splitlines()
        assert [orjson.loads(line)["event"] for line in lines] == ["shown"]


class TestLoggerMixin:
    """Test LoggerMixin."""

    def test_logger_mixin_provides_logger_property(self):
        """Test LoggerMixin provides logger property."""

        class Worker(LoggerMixin):
            pass

        assert Worker().logger is not None
