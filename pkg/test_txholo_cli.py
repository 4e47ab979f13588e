"""
End-to-end tests of the txholo command line.
"""
import json
import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

import txholo
from errors import QuadratureError

NETWORKS = Path(__file__).resolve().parent / "networks"


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("TXH_THREADS", "2")
    log = logging.getLogger("txholo")
    saved = (list(log.handlers), log.level, log.propagate)
    yield tmp_path
    for handler in log.handlers:
        if handler not in saved[0]:
            handler.close()
    log.handlers[:] = saved[0]
    log.setLevel(saved[1])
    log.propagate = saved[2]


def read_csv_report(path):
    return pd.read_csv(path, comment="#")


def read_json_report(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def test_variance_single_q(workdir):
    out = workdir / "variance.csv"
    assert txholo.main(["variance", "--q", "1", "--R", "1", "--out", str(out)]) == 0
    frame = read_csv_report(out)
    assert len(frame) == 1
    row = frame.iloc[0]
    assert row["regime"] == "underdamped"
    assert row["variance_quadrature"] == pytest.approx(math.pi / (3 * math.sqrt(3)), abs=1e-8)
    assert row["variance_closed"] == pytest.approx(math.pi / (3 * math.sqrt(3)), abs=1e-12)
    assert row["relative_delta"] <= 1e-6


def test_variance_csv_header_and_line_endings(workdir):
    out = workdir / "variance.csv"
    assert txholo.main(["variance", "--q", "2", "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert raw.startswith(b"# tool: txholo\r\n")
    assert b"# param R = 1.0\r\n" in raw
    assert b"\n" not in raw.replace(b"\r\n", b"")


def test_variance_flags_in_json(workdir):
    critical = workdir / "critical.json"
    assert txholo.main(["variance", "--q", "0.5", "--format", "json", "--out", str(critical)]) == 0
    doc = read_json_report(critical)
    assert [flag["code"] for flag in doc["flags"]] == ["critical_q_value"]
    assert doc["rows"][0]["variance_quadrature"] == pytest.approx(1.0, rel=1e-9)

    large = workdir / "large.json"
    assert txholo.main(["variance", "--q", "100", "--format", "json", "--out", str(large)]) == 0
    doc = read_json_report(large)
    assert "large_q_limit" in [flag["code"] for flag in doc["flags"]]
    assert doc["rows"][0]["large_q_ratio"] == pytest.approx(1.0, rel=0.01)


def test_variance_sweep_with_weighting(workdir):
    out = workdir / "sweep.csv"
    argv = ["variance", "--q-min", "0.75", "--q-max", "2", "--steps", "4",
            "--lambda-cutoff", "1e9", "--out", str(out)]
    assert txholo.main(argv) == 0
    frame = read_csv_report(out)
    assert len(frame) == 4
    np.testing.assert_allclose(frame["weighted_variance"], frame["gamma_times_closed"], rtol=1e-4)


def test_geometry_pure_ads(workdir):
    out = workdir / "geometry.csv"
    argv = ["geometry", "--beta", "0", "--z-min", "0.1", "--z-max", "10", "--steps", "32",
            "--out", str(out)]
    assert txholo.main(argv) == 0
    frame = read_csv_report(out)
    assert len(frame) == 32
    np.testing.assert_allclose(frame["lambda"], -4.0, rtol=1e-9)
    np.testing.assert_allclose(frame["R"], -24.0, rtol=1e-9)
    np.testing.assert_allclose(frame["div_T_z"], 0.0, atol=1e-10)


def test_geometry_flags_continuity_violation(workdir):
    out = workdir / "geometry.json"
    assert txholo.main(["geometry", "--beta", "0.5", "--format", "json", "--out", str(out)]) == 0
    doc = read_json_report(out)
    assert [flag["code"] for flag in doc["flags"]] == ["continuity_violation"]
    assert any(abs(row["div_T_z"]) > 1e-3 for row in doc["rows"])


def test_scatter_single_endpoint_network(workdir):
    out = workdir / "scatter.csv"
    argv = ["scatter", "--network", str(NETWORKS / "single_endpoint.cfg"),
            "--omega-min", "0.1", "--omega-max", "10", "--steps", "20", "--log", "--out", str(out)]
    assert txholo.main(argv) == 0
    frame = read_csv_report(out)
    assert len(frame) == 20
    np.testing.assert_allclose(frame["abs_s"], 1.0, atol=1e-12)
    np.testing.assert_allclose(frame["re_s"], -frame["re_s_raw"])
    assert "# flag s_matrix_sign:" in out.read_text(encoding="utf-8")


def test_scatter_three_line_network_is_unitary(workdir):
    out = workdir / "scatter.csv"
    argv = ["scatter", "--network", str(NETWORKS / "three_line.cfg"), "--omega", "1.0",
            "--out", str(out)]
    assert txholo.main(argv) == 0
    frame = read_csv_report(out)
    assert len(frame) == 9
    assert frame["unitarity_error"].max() <= 1e-10


def test_cmera_endpoint_table(workdir):
    out = workdir / "cmera.csv"
    argv = ["cmera", "--l", "1", "--c", "1", "--modes", "64", "--u-min", "-6", "--out", str(out)]
    assert txholo.main(argv) == 0
    frame = read_csv_report(out)
    assert len(frame) == 64
    assert set(frame.columns) >= {"s", "f_star", "chi_numeric", "g_uu"}


def test_propagator_with_boundary_csv(workdir):
    axis = np.round(np.arange(-300, 301) * 0.2, 10)
    xx, tt = np.meshgrid(axis, axis, indexing="ij")
    boundary = workdir / "phi0.csv"
    pd.DataFrame({"x": xx.ravel(), "t": tt.ravel(), "phi0": 1.0}).to_csv(boundary, index=False)
    out = workdir / "propagator.json"
    argv = ["propagator", "--boundary", str(boundary), "--z-min", "0.5", "--z-max", "2",
            "--steps", "3", "--format", "json", "--out", str(out)]
    assert txholo.main(argv) == 0
    doc = read_json_report(out)
    for row in doc["rows"]:
        assert abs(row["flux_residual"]) <= 1e-12
        assert row["flux"] == pytest.approx(1.0, rel=1e-12)
        assert row["phi"] == pytest.approx(math.pi, rel=5e-3)
    assert "kernel_signature" in [flag["code"] for flag in doc["flags"]]


def test_entropy_sweep(workdir):
    out = workdir / "entropy.csv"
    argv = ["entropy", "--a", "0.01", "--xi", "100", "--steps", "5", "--out", str(out)]
    assert txholo.main(argv) == 0
    frame = read_csv_report(out)
    np.testing.assert_allclose(frame["length"], np.log(frame["xi"] / 0.01), rtol=1e-14)
    np.testing.assert_allclose(frame["length_quadrature"], frame["length"], rtol=1e-10)


def test_line_report_to_stdout(workdir, capsys):
    assert txholo.main(["line", "--lt", "4", "--ct", "1", "--l", "1", "--c", "1"]) == 0
    text = capsys.readouterr().out
    assert "# param Z_T = 2.0" in text
    assert "# param q = 0.5" in text
    assert "# param decay_rate = " in text


def test_repeated_runs_are_byte_identical(workdir):
    first, second = workdir / "a.csv", workdir / "b.csv"
    argv = ["variance", "--q-min", "0.2", "--q-max", "3", "--steps", "6"]
    assert txholo.main(argv + ["--out", str(first)]) == 0
    assert txholo.main(argv + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_stamp_goes_to_header_only(workdir):
    out = workdir / "stamped.json"
    assert txholo.main(["entropy", "--a", "1", "--xi", "2", "--stamp", "--format", "json",
                        "--out", str(out)]) == 0
    doc = read_json_report(out)
    assert "timestamp" in doc["header"]
    assert "timestamp" not in doc["rows"][0]


@pytest.mark.parametrize("argv", [
    ["variance"],
    ["variance", "--q", "-1"],
    ["variance", "--q", "1", "--q-min", "0.5", "--q-max", "2"],
    ["scatter", "--network", "absent.cfg", "--omega", "1"],
    ["entropy", "--a", "2", "--xi", "1"],
    ["geometry", "--beta", "-1"],
    ["cmera", "--l", "1"],
])
def test_configuration_errors_exit_2(workdir, argv):
    assert txholo.main(argv) == 2


@pytest.mark.parametrize("argv", [
    ["entropy", "--a", "1", "--xi", "2", "--steps", "-1"],
    ["entropy", "--a", "1", "--xi", "2", "--steps", "0"],
    ["entropy", "--a", "1", "--xi", "2", "--steps", "1"],
    ["variance", "--q-min", "0.5", "--q-max", "2", "--steps", "0"],
])
def test_bad_step_counts_exit_2(workdir, capsys, argv):
    out = workdir / "steps.csv"
    assert txholo.main(argv + ["--out", str(out)]) == 2
    assert "--steps must be >= 2" in capsys.readouterr().err
    assert not out.exists()


def test_asymmetric_network_exits_2(workdir, capsys):
    bad = workdir / "bad.cfg"
    bad.write_text("[lines]\n1 1.0 1.0\n2 1.0 1.0\n[mutual_inductance]\n1 1 1.0\n2 2 1.0\n"
                   "2 1 0.2\n1 2 0.3\n[elastance]\n1 1 1.0\n2 2 1.0\n", encoding="utf-8")
    assert txholo.main(["scatter", "--network", str(bad), "--omega", "1"]) == 2
    assert "(1,2)" in capsys.readouterr().err


def test_numerical_failure_exits_3(workdir, monkeypatch, capsys):
    def failing(cfg, consts):
        raise QuadratureError("subdivision budget exhausted", operation="geodesic_log_length",
                              best_estimate=0.7)

    monkeypatch.setitem(txholo.HANDLERS, "entropy", failing)
    assert txholo.main(["entropy", "--a", "1", "--xi", "2"]) == 3
    assert "geodesic_log_length" in capsys.readouterr().err


def test_no_output_file_on_failure(workdir):
    out = workdir / "never.csv"
    assert txholo.main(["variance", "--out", str(out)]) == 2
    assert not out.exists()


def test_plot_is_written(workdir):
    figure = workdir / "geometry.png"
    assert txholo.main(["geometry", "--beta", "0.2", "--out", str(workdir / "g.csv"),
                        "--plot", str(figure)]) == 0
    assert figure.stat().st_size > 0
