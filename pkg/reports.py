"""
Report tables: header block, CSV and JSON writers, optional figure.

Data sections depend only on the inputs; the optional timestamp lives in
the header.
"""
import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

import settings

logger = logging.getLogger("txholo.reports")

FLOAT_FORMAT = "%.17g"


@dataclass
class Report:
    command: str
    params: Dict[str, Any]
    rows: List[Dict[str, Any]]
    flags: List[Dict[str, Any]] = field(default_factory=list)
    columns: Optional[Sequence[str]] = None
    stamp: Optional[str] = None

    def frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows)
        if self.columns is not None:
            frame = frame.reindex(columns=list(self.columns))
        return frame

    def header(self) -> Dict[str, Any]:
        head = {"tool": "txholo", "version": settings.VERSION, "command": self.command}
        if self.stamp is not None:
            head["timestamp"] = self.stamp
        return head


def utc_stamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def atomic_write(path: Path, text: str) -> None:
    """Write text to a temp file next to path, then rename it into place."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def _param_text(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(report: Report) -> str:
    lines = []
    for key, value in report.header().items():
        lines.append(f"# {key}: {value}")
    for key, value in report.params.items():
        lines.append(f"# param {key} = {_param_text(value)}")
    for flag in report.flags:
        lines.append(f"# flag {flag['code']}: {flag['message']}")
    buffer = io.StringIO()
    report.frame().to_csv(buffer, index=False, float_format=FLOAT_FORMAT,
                          quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    return "\r\n".join(lines) + "\r\n" + buffer.getvalue()


def render_json(report: Report) -> str:
    frame = report.frame()
    rows = [
        {col: _json_value(value) for col, value in record.items()}
        for record in frame.to_dict(orient="records")
    ]
    document = {
        "header": report.header(),
        "params": report.params,
        "rows": rows,
        "flags": report.flags,
    }
    return json.dumps(document, indent=2, default=_json_value, allow_nan=False) + "\n"


def _json_value(value: Any) -> Any:
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, float) and value != value:
        return None
    return value


def write_report(report: Report, path: Optional[Path], fmt: str = "csv") -> str:
    """Render and, when path is given, atomically write a report."""
    text = render_json(report) if fmt == "json" else render_csv(report)
    if path is not None:
        atomic_write(Path(path), text)
        logger.info("wrote %s report with %d rows to %s", report.command, len(report.rows), path)
    return text


def plot_report(report: Report, path: Path, x: str, ys: Sequence[str],
                logx: bool = False, title: Optional[str] = None) -> Path:
    """Line plot of selected report columns."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    frame = report.frame()
    fig, ax = plt.subplots(figsize=(8, 5))
    for column in ys:
        if column in frame.columns:
            ax.plot(frame[x], frame[column], marker="o", markersize=3, linewidth=1.5, label=column)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(x)
    ax.set_title(title or f"txholo {report.command}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    logger.info("figure saved to %s", path)
    return Path(path)
