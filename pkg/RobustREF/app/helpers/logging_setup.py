"""
This module configures logging for the command-line entry point.

Records are written to stderr as `key=value` pairs:

    ts=2024-09-06T10:00:00 level=INFO logger=services.experiment_service msg="replicate 3 rejected"
"""
import logging
import sys

_HANDLER_NAME = "robustref"


class KeyValueFormatter(logging.Formatter):
    """
    Formats a record as space separated key=value pairs.
    """

    def format(self, record: logging.LogRecord) -> str:
        message = record.getMessage().replace('"', "'")
        line = (
            f"ts={self.formatTime(record, '%Y-%m-%dT%H:%M:%S')} "
            f"level={record.levelname} logger={record.name} msg=\"{message}\""
        )
        if record.exc_info:
            line += f" exc=\"{self.formatException(record.exc_info)!r}\""
        return line


def configure_logging(level: str = "WARNING") -> None:
    """
    Install the stderr handler on the root logger; calling it again resets the level and
    points the handler at the current stderr.

    Args:
        level (str): Logging level name such as DEBUG or INFO.
    """
    root = logging.getLogger()
    root.setLevel(level.upper())
    for handler in root.handlers:
        if handler.get_name() == _HANDLER_NAME:
            handler.setStream(sys.stderr)
            return
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(KeyValueFormatter())
    root.addHandler(handler)
