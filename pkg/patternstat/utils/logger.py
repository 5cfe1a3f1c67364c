import logging
import os
import sys
from datetime import datetime
from typing import Any, Dict, Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class PatternStatLogger:
    """
    Logging setup for patternstat runs.

    Console output goes to stderr so that stdout only carries reports.
    When a log directory is given, a dated main log and a separate error
    log are written there as well.
    """

    def __init__(self, log_dir: Optional[str] = None, level: str = "INFO"):
        self.log_dir = log_dir
        self.level = level
        self.setup_logging()

    def setup_logging(self):
        """
        Configure the root logger with console and optional file handlers.
        """
        logger = logging.getLogger()
        logger.setLevel(self._numeric_level(self.level))

        for handler in logger.handlers[:]:
            logger.removeHandler(handler)

        formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(self._numeric_level(self.level))
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if not self.log_dir:
            return

        os.makedirs(self.log_dir, exist_ok=True)
        today = datetime.now().strftime('%Y-%m-%d')

        file_handler = logging.FileHandler(
            os.path.join(self.log_dir, f"patternstat_{today}.log"), encoding='utf-8')
        file_handler.setLevel(self._numeric_level(self.level))
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

        error_handler = logging.FileHandler(
            os.path.join(self.log_dir, f"errors_{today}.log"), encoding='utf-8')
        error_handler.setLevel(logging.ERROR)
        error_handler.setFormatter(formatter)
        logger.addHandler(error_handler)

    @staticmethod
    def _numeric_level(level: str) -> int:
        numeric_level = getattr(logging, str(level).upper(), None)
        if not isinstance(numeric_level, int):
            raise ValueError(f'Invalid log level: {level}')
        return numeric_level

    def get_logger(self, name: str) -> logging.Logger:
        return logging.getLogger(name)

    def log_run_start(self, command: str, config: Dict[str, Any]):
        """
        Log the start of a run together with its configuration.

        Args:
            command: subcommand name
            config: configuration echo
        """
        logger = self.get_logger("run")
        logger.info(f"=== START {command} ({datetime.now().strftime(DATE_FORMAT)}) ===")
        for key, value in config.items():
            logger.info(f"  {key}: {value}")

    def log_run_end(self, command: str, summary: Dict[str, Any]):
        """
        Log the end of a run with its main results.

        Args:
            command: subcommand name
            summary: result values worth a log line
        """
        logger = self.get_logger("run")
        for key, value in summary.items():
            if isinstance(value, float):
                logger.info(f"  {key}: {value:.6g}")
            else:
                logger.info(f"  {key}: {value}")
        logger.info(f"=== END {command} ===")

    def log_error(self, module: str, error_type: str, message: str,
                  exception: Exception = None):
        """
        Log an error with context.

        Args:
            module: module where the error happened
            error_type: error category
            message: error message
            exception: original exception (optional)
        """
        logger = self.get_logger(module)
        error_msg = f"ERROR [{error_type}]: {message}"
        if exception:
            error_msg += f" - Exception: {exception}"
        logger.error(error_msg)

    def set_log_level(self, level: str):
        """
        Change the logging level of the root logger and its console/main handlers.

        Args:
            level: 'DEBUG', 'INFO', 'WARNING', 'ERROR' or 'CRITICAL'
        """
        numeric_level = self._numeric_level(level)
        self.level = level
        logger = logging.getLogger()
        logger.setLevel(numeric_level)
        for handler in logger.handlers:
            if handler.level != logging.ERROR:
                handler.setLevel(numeric_level)


_logger_instance: Optional[PatternStatLogger] = None


def get_logger(name: str = None) -> logging.Logger:
    """Return a named logger, configuring console logging on first use."""
    global _logger_instance
    if _logger_instance is None:
        _logger_instance = PatternStatLogger()
    return _logger_instance.get_logger(name or __name__)


def setup_logging(log_dir: Optional[str] = None, level: str = "INFO") -> PatternStatLogger:
    """Initialise logging for a run."""
    global _logger_instance
    _logger_instance = PatternStatLogger(log_dir, level)
    return _logger_instance


def log_run_start(command: str, config: Dict[str, Any]):
    if _logger_instance:
        _logger_instance.log_run_start(command, config)


def log_run_end(command: str, summary: Dict[str, Any]):
    if _logger_instance:
        _logger_instance.log_run_end(command, summary)


def log_error(module: str, error_type: str, message: str, exception: Exception = None):
    if _logger_instance:
        _logger_instance.log_error(module, error_type, message, exception)
