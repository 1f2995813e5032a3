# run_logger.py
import logging
from typing import List

import colorlog

LOGGER_NAME = 'quasinodal'

# --- Setup Logging with Colors ---
handler = colorlog.StreamHandler()
handler.setFormatter(colorlog.ColoredFormatter(
    '%(log_color)s[%(asctime)s] [%(levelname)s]: %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S',
    log_colors={
        'DEBUG': 'cyan',
        'INFO': 'blue',
        'WARNING': 'yellow',
        'ERROR': 'red',
        'CRITICAL': 'red,bg_white',
    }
))
logger = colorlog.getLogger(LOGGER_NAME)
if not logger.handlers:
    logger.addHandler(handler)
logger.setLevel(logging.INFO)
logger.propagate = False
logging.getLogger('asyncio').setLevel(logging.WARNING)


class RecordLogHandler(logging.Handler):
    """Collects log messages (no timestamps) so they can be stored in a run record."""

    def __init__(self, level=logging.WARNING):
        super().__init__(level)
        self.messages: List[str] = []

    def emit(self, record):
        try:
            self.messages.append(f"[{record.levelname}] {record.getMessage()}")
        except Exception:
            self.handleError(record)


def set_verbosity(verbose: bool):
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def attach_record_handler() -> RecordLogHandler:
    record_handler = RecordLogHandler()
    logger.addHandler(record_handler)
    return record_handler


def detach_record_handler(record_handler: RecordLogHandler):
    logger.removeHandler(record_handler)
