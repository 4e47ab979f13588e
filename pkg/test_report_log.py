"""
Tests for report flags and logging setup.
"""
import json
import logging

import pytest

import settings
from errors import ConfigError
from report_log import ReportFlagHandler, emit_flag, find_flag_handler, setup_logging


@pytest.fixture(autouse=True)
def restore_package_logger():
    log = logging.getLogger("txholo")
    saved = (list(log.handlers), log.level, log.propagate)
    yield
    for handler in log.handlers:
        if handler not in saved[0]:
            handler.close()
    log.handlers[:] = saved[0]
    log.setLevel(saved[1])
    log.propagate = saved[2]


def test_flags_are_collected_once_in_order():
    handler = ReportFlagHandler()
    log = logging.getLogger("txholo.test_flags")
    log.addHandler(handler)
    try:
        emit_flag(log, "first", "one", q=0.5)
        emit_flag(log, "second", "two")
        emit_flag(log, "first", "one", q=0.5)
        log.warning("plain warning without a flag")
    finally:
        log.removeHandler(handler)
    flags = handler.flags()
    assert [f["code"] for f in flags] == ["first", "second"]
    assert flags[0]["q"] == 0.5
    assert flags[0]["logger"] == "txholo.test_flags"


def test_drain_empties_the_buffer():
    handler = ReportFlagHandler()
    log = logging.getLogger("txholo.test_drain")
    log.addHandler(handler)
    try:
        emit_flag(log, "code", "message")
    finally:
        log.removeHandler(handler)
    assert len(handler.drain()) == 1
    assert handler.drain() == []


def test_setup_logging_from_shipped_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    handler = setup_logging(settings.DEFAULT_LOG_CONFIG)
    log = logging.getLogger("txholo")
    assert find_flag_handler(log) is handler
    assert log.propagate is False
    emit_flag(logging.getLogger("txholo.scattering"), "critical_q_value", "test")
    assert [f["code"] for f in handler.drain()] == ["critical_q_value"]


def test_setup_logging_attaches_handler_without_config_file(tmp_path):
    config = tmp_path / "logging.json"
    config.write_text(json.dumps({
        "version": 1,
        "disable_existing_loggers": False,
        "handlers": {"null": {"class": "logging.NullHandler"}},
        "loggers": {"txholo": {"handlers": ["null"], "level": "ERROR", "propagate": False}},
    }), encoding="utf-8")
    handler = setup_logging(config)
    log = logging.getLogger("txholo")
    assert find_flag_handler(log) is handler
    assert log.level == logging.WARNING


def test_setup_logging_missing_file_falls_back(tmp_path):
    handler = setup_logging(tmp_path / "absent.json")
    assert isinstance(handler, ReportFlagHandler)
    assert find_flag_handler() is handler


def test_settings_defaults(monkeypatch):
    for name in ("TXH_THREADS", "TXH_GRID_MODES", "TXH_U_MIN", "TXH_LOG_CONFIG"):
        monkeypatch.delenv(name, raising=False)
    assert settings.thread_limit() >= 1
    assert settings.grid_modes() == 512
    assert settings.u_min() == -12.0
    assert settings.log_config_path() == settings.DEFAULT_LOG_CONFIG


def test_settings_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("TXH_THREADS", "3")
    monkeypatch.setenv("TXH_GRID_MODES", "64")
    monkeypatch.setenv("TXH_U_MIN", "-4.5")
    monkeypatch.setenv("TXH_LOG_CONFIG", str(tmp_path / "log.json"))
    assert settings.thread_limit() == 3
    assert settings.grid_modes() == 64
    assert settings.u_min() == -4.5
    assert settings.log_config_path() == tmp_path / "log.json"


@pytest.mark.parametrize("name, value, accessor", [
    ("TXH_THREADS", "0", settings.thread_limit),
    ("TXH_THREADS", "many", settings.thread_limit),
    ("TXH_GRID_MODES", "1", settings.grid_modes),
    ("TXH_U_MIN", "2.0", settings.u_min),
    ("TXH_U_MIN", "deep", settings.u_min),
])
def test_settings_reject_bad_values(monkeypatch, name, value, accessor):
    monkeypatch.setenv(name, value)
    with pytest.raises(ConfigError):
        accessor()
