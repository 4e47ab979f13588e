"""
Logging plumbing for txholo reports.

Library modules announce discrepancies between published closed forms and
numerical oracles as WARNING records carrying a ``flag`` payload.
ReportFlagHandler collects those payloads so the CLI can write them into the
report it is producing.
"""
import json
import logging
import logging.config
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional

import settings

logger = logging.getLogger("txholo.report_log")


def emit_flag(log: logging.Logger, code: str, message: str, **payload: Any) -> None:
    """
    Log a report flag.

    Args:
        log: Logger of the module raising the flag
        code: Stable machine-readable flag identifier
        message: Human-readable description
        **payload: Extra JSON-serializable fields stored with the flag
    """
    flag = {"code": code, "message": message}
    flag.update(payload)
    log.warning("%s: %s", code, message, extra={"flag": flag})


class ReportFlagHandler(logging.Handler):
    """
    Collects ``flag`` payloads from log records into an ordered list.

    Records without a payload are ignored, so the handler can sit on the
    package logger next to ordinary console and file handlers.
    """

    def __init__(self, level=logging.WARNING):
        super().__init__(level)
        self._flags: List[Dict[str, Any]] = []
        self._flag_lock = threading.Lock()

    def emit(self, record):
        flag = getattr(record, "flag", None)
        if not isinstance(flag, dict):
            return
        try:
            entry = dict(flag)
            entry.setdefault("logger", record.name)
            with self._flag_lock:
                # One entry per distinct flag; sweeps raise the same notice per point.
                if entry not in self._flags:
                    self._flags.append(entry)
        except Exception:
            self.handleError(record)

    def flags(self) -> List[Dict[str, Any]]:
        with self._flag_lock:
            return list(self._flags)

    def drain(self) -> List[Dict[str, Any]]:
        """Return the collected flags and reset the buffer."""
        with self._flag_lock:
            flags, self._flags = self._flags, []
        return flags


def find_flag_handler(log: Optional[logging.Logger] = None) -> Optional[ReportFlagHandler]:
    log = log or logging.getLogger("txholo")
    for handler in log.handlers:
        if isinstance(handler, ReportFlagHandler):
            return handler
    return None


def setup_logging(path: Optional[Path] = None) -> ReportFlagHandler:
    """
    Configure logging from a JSON dictConfig document.

    Falls back to basicConfig when the file does not exist. Always returns
    the ReportFlagHandler attached to the ``txholo`` logger, adding one if the
    configuration did not declare it.
    """
    path = Path(path) if path is not None else settings.log_config_path()
    if path.exists():
        with open(path, "r", encoding="utf-8") as f:
            config = json.load(f)
        logging.config.dictConfig(config)
    else:
        logging.basicConfig(
            level=logging.WARNING,
            format="%(asctime)s %(levelname)s %(name)s - %(message)s",
        )

    package_logger = logging.getLogger("txholo")
    handler = find_flag_handler(package_logger)
    if handler is None:
        handler = ReportFlagHandler()
        package_logger.addHandler(handler)
        if package_logger.level == logging.NOTSET or package_logger.level > logging.WARNING:
            package_logger.setLevel(logging.WARNING)
        logger.debug("attached a ReportFlagHandler to the txholo logger")
    return handler
