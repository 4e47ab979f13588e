"""
Tests for transfer functions, scattering matrices and charge variances.
"""
import logging
import math

import numpy as np
import pytest

from circuits import EndpointLCSpec, TransmissionLineSpec
from errors import AsymmetricMatrixError, ConfigError, NotPositiveSemidefiniteError
from report_log import ReportFlagHandler
from scattering import (JunctionSpec, QFactorRegime, Regime, charge_variance_closed,
                        charge_variance_quadrature, cmera_weighted_variance,
                        ScatterSample, gamma_factor, large_q_ratio, network_s_matrix,
                        published_charge_variance, report_variance_discrepancies,
                        s_matrix_sweep, single_line_s, transfer_function)

UNIT_EP = EndpointLCSpec(1.0, 1.0)
Q_GRID = [0.1, 0.25, 0.49, 0.51, 0.75, 1.0, 2.0, 5.0, 20.0]


def random_junction(rng, n):
    a = rng.normal(size=(n, n))
    b = rng.normal(size=(n, n))
    lines = tuple(TransmissionLineSpec(r * r, 1.0) for r in rng.uniform(0.5, 2.0, n))
    # Each R_i = sqrt(L_T / C_T) = r_i lands in [0.5, 2].
    return JunctionSpec(lines, a @ a.T, b @ b.T)


def test_transfer_function_at_resonance():
    assert transfer_function(1.0, UNIT_EP, 1.0) == pytest.approx(-1j, abs=1e-15)


def test_transfer_function_static_limit():
    ep = EndpointLCSpec(2.0, 0.3)
    assert transfer_function(1e-9, ep, 1.5) == pytest.approx(0.3, rel=1e-8)
    assert transfer_function(0.0, ep, 1.5) == pytest.approx(0.3, rel=1e-15)


@pytest.mark.parametrize("omega", [0.1, 0.9, 1.0, 3.0, 40.0])
def test_transfer_function_modulus_identity(omega):
    ep, r = EndpointLCSpec(1.3, 0.4), 0.8
    h = transfer_function(omega, ep, r)
    den = (omega ** 2 * ep.inductance - 1.0 / ep.capacitance) ** 2 + omega ** 2 * r ** 2
    assert abs(h) ** 2 * den == pytest.approx(1.0, rel=1e-13)


def test_transfer_function_undamped_pole():
    from errors import SingularJunctionError
    with pytest.raises(SingularJunctionError):
        transfer_function(1.0, UNIT_EP, 0.0)


def test_single_line_s_examples():
    assert single_line_s(1.0, UNIT_EP, 1.0) == pytest.approx(-1.0, abs=1e-15)
    assert single_line_s(1e-8, UNIT_EP, 1.0) == pytest.approx(1.0, abs=1e-7)
    assert single_line_s(2.0, UNIT_EP, 1.0) == pytest.approx((5 + 12j) / 13, abs=1e-15)


def test_single_line_s_is_unimodular():
    ep = EndpointLCSpec(0.7, 2.2)
    for omega in np.geomspace(1e-3, 1e3, 1000) * ep.omega0:
        assert abs(abs(single_line_s(float(omega), ep, 1.3)) - 1.0) <= 1e-12


def test_network_reduces_to_single_line_with_published_sign():
    line = TransmissionLineSpec(1.0, 1.0)
    junction = JunctionSpec.single_endpoint(UNIT_EP, line)
    for omega in (0.3, 1.0, 2.0, 7.0):
        sample = network_s_matrix(omega, junction)
        expected = single_line_s(omega, UNIT_EP, line.resistance)
        assert sample.s_matrix[0, 0] == pytest.approx(expected, abs=1e-13)
        assert sample.raw_s_matrix[0, 0] == pytest.approx(-expected, abs=1e-13)
        assert abs(sample.s_matrix[0, 0]) == pytest.approx(1.0, abs=1e-13)


def test_decoupled_junction_is_diagonal():
    lines = (TransmissionLineSpec(1.0, 1.0), TransmissionLineSpec(4.0, 1.0))
    eps = (EndpointLCSpec(1.0, 1.0), EndpointLCSpec(0.5, 2.0))
    junction = JunctionSpec(lines, np.diag([e.inductance for e in eps]),
                            np.diag([1.0 / e.capacitance for e in eps]))
    sample = network_s_matrix(1.7, junction)
    assert sample.s_matrix[0, 1] == 0
    assert sample.s_matrix[1, 0] == 0
    for i in range(2):
        assert sample.s_matrix[i, i] == pytest.approx(
            single_line_s(1.7, eps[i], lines[i].resistance), abs=1e-13)


def test_three_line_junction_is_unitary():
    rng = np.random.default_rng(2024)
    junction = random_junction(rng, 3)
    for omega in (0.3, 1.0, 7.0):
        assert network_s_matrix(omega, junction).unitarity_error() <= 1e-10


def test_random_junctions_are_unitary_and_reciprocal():
    rng = np.random.default_rng(42)
    for trial in range(20):
        junction = random_junction(rng, [2, 3, 4][trial % 3])
        for sample in s_matrix_sweep(rng.uniform(0.1, 10.0, 3), junction):
            assert sample.unitarity_error() <= 1e-10
            assert sample.reciprocity_error() <= 1e-10


def test_s_matrix_is_the_direct_solve():
    junction = random_junction(np.random.default_rng(7), 3)
    omega = 1.7
    r = junction.resistances
    a = -omega ** 2 * junction.mutual_inductance + junction.elastance + 1j * omega * np.diag(r)
    d = np.diag(np.sqrt(r))
    expected = 2j * omega * d @ np.linalg.inv(a) @ d - np.eye(3)
    sample = network_s_matrix(omega, junction)
    np.testing.assert_allclose(sample.raw_s_matrix, expected, atol=1e-10)
    np.testing.assert_array_equal(sample.s_matrix, -sample.raw_s_matrix)


def test_reciprocity_error_sees_asymmetry():
    s = np.array([[0.0, 1.0], [0.5, 0.0]])
    sample = ScatterSample(omega=1.0, s_matrix=s, raw_s_matrix=-s)
    assert sample.reciprocity_error() == 0.5


def test_junction_validation():
    line = TransmissionLineSpec(1.0, 1.0)
    with pytest.raises(AsymmetricMatrixError) as info:
        JunctionSpec((line, line), [[1.0, 0.1], [0.2, 1.0]], np.eye(2))
    assert info.value.indices == (1, 2)
    with pytest.raises(NotPositiveSemidefiniteError):
        JunctionSpec((line, line), np.eye(2), [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ConfigError):
        JunctionSpec((line,), np.eye(2), np.eye(2))


def test_regime_labels():
    assert QFactorRegime.classify(1.0).regime is Regime.UNDERDAMPED
    assert QFactorRegime.classify(0.5).regime is Regime.CRITICAL
    assert QFactorRegime.classify(0.2).regime is Regime.OVERDAMPED
    with pytest.raises(ConfigError):
        QFactorRegime(0.2, Regime.UNDERDAMPED)


def test_quadrature_oracles():
    assert charge_variance_quadrature(1.0, 1.0) == pytest.approx(
        math.pi / (3.0 * math.sqrt(3.0)), abs=1e-8)
    assert charge_variance_quadrature(0.5, 1.0) == pytest.approx(1.0, rel=1e-9)
    assert charge_variance_quadrature(100.0, 1.0) == pytest.approx(math.pi / 400.0, rel=0.01)


def test_closed_form_oracles():
    assert charge_variance_closed(1.0, 1.0) == pytest.approx(math.pi / (3.0 * math.sqrt(3.0)), abs=1e-12)
    assert charge_variance_closed(0.5, 1.0) == pytest.approx(1.0, rel=1e-14)
    # q = 1/4: artanh(e/a)/e with e = sqrt(3)/2, a = 7/8
    e, a = math.sqrt(0.75), 0.875
    assert charge_variance_closed(0.25, 1.0) == pytest.approx(0.5 * math.atanh(e / a) / e, rel=1e-12)


@pytest.mark.parametrize("q", Q_GRID)
def test_closed_form_matches_quadrature(q):
    quad = charge_variance_quadrature(q, 1.0)
    closed = charge_variance_closed(q, 1.0)
    assert closed == pytest.approx(quad, rel=1e-6)


def test_closed_form_is_continuous_through_critical_q():
    below = charge_variance_closed(0.5 - 1e-7, 1.0)
    at = charge_variance_closed(0.5, 1.0)
    above = charge_variance_closed(0.5 + 1e-7, 1.0)
    assert below == pytest.approx(at, rel=1e-6)
    assert above == pytest.approx(at, rel=1e-6)


def test_variance_scales_with_hbar_over_r():
    base = charge_variance_closed(2.0, 1.0, 1.0)
    assert charge_variance_closed(2.0, 4.0, 3.0) == pytest.approx(base * 3.0 / 4.0, rel=1e-15)


def test_variance_decreases_with_q():
    values = [charge_variance_closed(q, 1.0) for q in np.geomspace(0.1, 20.0, 60)]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_published_values_differ_where_expected():
    assert published_charge_variance(0.5, 1.0) == pytest.approx(math.pi / 2.0)
    assert published_charge_variance(1.0, 1.0) == charge_variance_closed(1.0, 1.0)
    assert published_charge_variance(0.25, 1.0) != pytest.approx(charge_variance_closed(0.25, 1.0), rel=1e-3)


def test_large_q_ratio_tends_to_one():
    assert large_q_ratio(100.0, 1.0) == pytest.approx(1.0, rel=0.01)


def test_discrepancy_flags_are_logged():
    handler = ReportFlagHandler()
    log = logging.getLogger("txholo.scattering")
    log.addHandler(handler)
    try:
        report_variance_discrepancies(0.5, 1.0)
        report_variance_discrepancies(100.0, 1.0)
        report_variance_discrepancies(1.0, 1.0)
    finally:
        log.removeHandler(handler)
    codes = [flag["code"] for flag in handler.flags()]
    assert codes == ["critical_q_value", "large_q_limit"]
    critical = handler.flags()[0]
    assert critical["published"] == pytest.approx(math.pi / 2.0)
    assert critical["integrated"] == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("q", [0.75, 1.0, 2.0])
def test_weighted_variance_large_cutoff_limit(q):
    value = cmera_weighted_variance(q, 1.0, 1e9, 1.0, 1.0)
    assert value == pytest.approx(charge_variance_closed(q, 1.0), rel=1e-4)


def test_weighted_variance_is_linear_in_gamma():
    one = cmera_weighted_variance(1.0, 1.0, 1e9, 1.0, 1.0)
    assert cmera_weighted_variance(1.0, 2.0, 1e9, 1.0, 1.0) == pytest.approx(2.0 * one, rel=1e-15)


def test_weighted_variance_below_unweighted_at_finite_cutoff():
    assert cmera_weighted_variance(1.0, 1.0, 10.0, 1.0, 1.0) < charge_variance_closed(1.0, 1.0)


def test_gamma_factor():
    assert gamma_factor(2.0, 9.0, 1.0) == pytest.approx(1.5)
