import logging
import sys
from typing import Any, Optional

from config import config


class ColoredFormatter(logging.Formatter):
    """Custom formatter with colors for different log levels"""

    COLORS = {
        'DEBUG': '\033[36m',    # Cyan
        'INFO': '\033[32m',     # Green
        'WARNING': '\033[33m',  # Yellow
        'ERROR': '\033[31m',    # Red
        'CRITICAL': '\033[35m', # Magenta
        'RESET': '\033[0m'      # Reset
    }

    def format(self, record):
        log_color = self.COLORS.get(record.levelname, self.COLORS['RESET'])
        reset_color = self.COLORS['RESET']
        record = logging.makeLogRecord(record.__dict__)
        record.levelname = f"{log_color}{record.levelname}{reset_color}"
        return super().format(record)


class ComputationLogger:
    """Logger for the parahoric-blocks kernels and CLI"""

    def __init__(self, name: str = "parahoric_blocks", level: str = "WARNING",
                 log_file: Optional[str] = None):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False

        self.logger.handlers.clear()

        # stdout is reserved for JSON reports
        self.console_handler = logging.StreamHandler(sys.stderr)
        self.console_handler.setLevel(getattr(logging, level))
        formatter = ColoredFormatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            datefmt='%H:%M:%S'
        )
        self.console_handler.setFormatter(formatter)
        self.logger.addHandler(self.console_handler)

        if log_file:
            file_handler = logging.FileHandler(log_file)
            file_handler.setLevel(logging.DEBUG)
            file_formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
            )
            file_handler.setFormatter(file_formatter)
            self.logger.addHandler(file_handler)

    def set_level(self, level: str):
        """Change the console verbosity"""
        self.console_handler.setLevel(getattr(logging, level.upper()))

    def log_job_start(self, command: str, details: str = ""):
        """Log the start of a CLI job"""
        self.logger.info(f"▶ {command} {details}".rstrip())

    def log_quantity(self, name: str, value: Any, tag: str = ""):
        """Log a computed quantity with its provenance tag"""
        suffix = f" [{tag}]" if tag else ""
        self.logger.debug(f"{name} = {value}{suffix}")

    def log_cache(self, event: str, path: str):
        """Log fusion cache activity"""
        self.logger.debug(f"cache {event}: {path}")

    def log_oracle_check(self, description: str, residual: float, ok: bool):
        """Log an oracle comparison"""
        if ok:
            self.logger.debug(f"✅ oracle agrees: {description} (residual {residual:.2e})")
        else:
            self.logger.error(f"❌ oracle disagrees: {description} (residual {residual:.2e})")

    def log_test_start(self, test_name: str):
        """Log test start"""
        self.logger.info(f"🧪 Starting test: {test_name}")

    def log_test_result(self, test_name: str, success: bool, details: str = ""):
        """Log test result"""
        if success:
            self.logger.info(f"✅ Test passed: {test_name}")
        else:
            self.logger.error(f"❌ Test failed: {test_name}")

        if details:
            self.logger.info(f"Details: {details}")


# Global logger instance
logger = ComputationLogger(level=config.LOG_LEVEL, log_file=config.LOG_FILE or None)
for _warning in config.warnings:
    logger.logger.warning(f"⚠️  {_warning}")
