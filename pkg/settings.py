"""
Environment-driven settings.

Values come from the process environment, optionally seeded from a `.env`
file in the working directory.
"""
import os
from pathlib import Path

from dotenv import load_dotenv

from errors import ConfigError

load_dotenv()

VERSION = "0.3.0"

HBAR_SI = 1.054571817e-34

DEFAULT_LOG_CONFIG = Path(__file__).resolve().parent / "txholo_logging.json"


def _int_env(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}") from None


def thread_limit() -> int:
    """Worker cap for CLI sweeps (TXH_THREADS)."""
    return _int_env("TXH_THREADS", os.cpu_count() or 1)


def grid_modes() -> int:
    return _int_env("TXH_GRID_MODES", 512, minimum=2)


def u_min() -> float:
    value = _float_env("TXH_U_MIN", -12.0)
    if value >= 0:
        raise ConfigError(f"TXH_U_MIN must be negative, got {value}")
    return value


def log_config_path() -> Path:
    return Path(os.getenv("TXH_LOG_CONFIG", str(DEFAULT_LOG_CONFIG)))
