"""
Tests for the shared numerical kernels.
"""
import math

import numpy as np
import pytest

from errors import ConfigError, QuadratureError
from numerics import (SEMI_INFINITE, Jet, QuadratureSpec, derivative, integrate,
                      jet_derivatives, jexp, jlog, jsqrt, minimize_scalar)


def test_integrate_exponential_on_half_line():
    result = integrate(lambda q: math.exp(-q), (0.0, math.inf), SEMI_INFINITE)
    assert result.value == pytest.approx(1.0, abs=1e-12)


def test_integrate_variance_oracle():
    result = integrate(lambda q: q / ((q * q - 1.0) ** 2 + q * q), (0.0, math.inf),
                       SEMI_INFINITE, points=(1.0,))
    assert result.value == pytest.approx(2.0 * math.pi / (3.0 * math.sqrt(3.0)), rel=1e-10)


def test_integrate_finite_interval():
    result = integrate(lambda q: 4.0 / (1.0 + q * q), (0.0, 1.0))
    assert result.value == pytest.approx(math.pi, rel=1e-13)


# (integrand, domain, spec, exact)
KNOWN_INTEGRALS = [
    (lambda x: x * x, (0.0, 3.0), QuadratureSpec(), 9.0),
    (math.sin, (0.0, math.pi), QuadratureSpec(), 2.0),
    (lambda x: math.exp(-x * x), (0.0, math.inf), SEMI_INFINITE, math.sqrt(math.pi) / 2.0),
    (lambda x: 1.0 / (1.0 + x * x), (0.0, math.inf), SEMI_INFINITE, math.pi / 2.0),
    (lambda x: 1.0 / x, (1.0, math.e ** 2), QuadratureSpec(), 2.0),
    (lambda x: math.sqrt(x), (0.0, 1.0), QuadratureSpec(), 2.0 / 3.0),
    (lambda x: x * math.exp(-x), (0.0, math.inf), SEMI_INFINITE, 1.0),
    (lambda x: 1.0 / (1.0 + x) ** 2, (0.0, math.inf), SEMI_INFINITE, 1.0),
    (math.cos, (0.0, math.pi / 2.0), QuadratureSpec(), 1.0),
    (lambda x: math.log(x), (1.0, math.e), QuadratureSpec(), 1.0),
]


@pytest.mark.parametrize("f, domain, spec, exact", KNOWN_INTEGRALS)
def test_error_estimate_is_conservative(f, domain, spec, exact):
    result = integrate(f, domain, spec)
    assert abs(result.value - exact) <= max(result.error, 4 * np.spacing(exact))
    assert result.error <= max(spec.abs_tol, spec.rel_tol * abs(result.value))


def test_subdivision_budget_exhaustion_carries_best_estimate():
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=1)
    with pytest.raises(QuadratureError) as info:
        integrate(lambda x: math.sin(50.0 * x) ** 2, (0.0, 10.0), spec)
    assert info.value.best_estimate is not None


def test_quadrature_spec_validation():
    with pytest.raises(ConfigError):
        QuadratureSpec(abs_tol=0.0)
    with pytest.raises(ConfigError):
        QuadratureSpec(transform="tan")
    with pytest.raises(ConfigError):
        integrate(lambda x: x, (1.0, 2.0), SEMI_INFINITE)


def test_minimize_symmetric_exponentials():
    g = lambda f: math.exp(2 * f) + math.exp(-2 * f)
    assert minimize_scalar(g, (-30.0, 30.0)) == pytest.approx(0.0, abs=1e-8)


def test_minimize_with_analytic_derivative():
    a, b = 1.0, math.exp(4.0)
    g = lambda f: a * math.exp(2 * f) + b * math.exp(-2 * f)
    dg = lambda f: 2 * a * math.exp(2 * f) - 2 * b * math.exp(-2 * f)
    assert minimize_scalar(g, (-30.0, 30.0), dg=dg) == pytest.approx(1.0, abs=1e-12)


def test_minimize_quadratic():
    assert minimize_scalar(lambda f: (f - 3.0) ** 2, (-10.0, 10.0)) == pytest.approx(3.0, abs=1e-8)


def test_minimize_rejects_non_bracketing_interval():
    with pytest.raises(ConfigError):
        minimize_scalar(lambda f: (f - 3.0) ** 2, (4.0, 10.0))


def test_central_derivatives():
    assert derivative(lambda x: x * x, 3.0) == pytest.approx(6.0, rel=1e-9)
    assert derivative(lambda z: 1.0 / z ** 2, 1.0, order=2) == pytest.approx(6.0, rel=1e-6)


def test_dual_derivatives_are_exact():
    assert derivative(lambda x: x * x, 3.0, method="dual") == 6.0
    assert derivative(lambda z: 1.0 / z ** 2, 1.0, order=2, method="dual") == pytest.approx(6.0, rel=1e-15)


def test_jet_elementary_functions():
    x = 0.7
    value, d1, d2 = jet_derivatives(lambda t: jexp(t) * jlog(t) + jsqrt(t) / (1.0 + t), x)
    exact = math.exp(x) * math.log(x) + math.sqrt(x) / (1 + x)
    exact_d1 = (math.exp(x) * math.log(x) + math.exp(x) / x
                + 0.5 / math.sqrt(x) / (1 + x) - math.sqrt(x) / (1 + x) ** 2)
    assert value == pytest.approx(exact, rel=1e-15)
    assert d1 == pytest.approx(exact_d1, rel=1e-14)
    assert d2 == pytest.approx(derivative(lambda t: math.exp(t) * math.log(t)
                                          + math.sqrt(t) / (1 + t), x, order=2), rel=1e-6)


def test_jet_with_array_components():
    z = np.array([0.5, 1.0, 2.0])
    value, d1, d2 = jet_derivatives(lambda t: 3.0 - t ** 3, z)
    np.testing.assert_allclose(value, 3.0 - z ** 3)
    np.testing.assert_allclose(d1, -3.0 * z ** 2)
    np.testing.assert_allclose(d2, -6.0 * z)


def test_jet_reflected_operations():
    j = Jet.variable(2.0)
    out = 1.0 - 4.0 / j + 2.0 ** j
    assert out.value == pytest.approx(1.0 - 2.0 + 4.0)
    assert out.d1 == pytest.approx(1.0 + 4.0 * math.log(2.0))


def test_dual_and_central_agree_on_metric_weight():
    weight = lambda z: z * z / (4.0 * (z * z + 0.3) ** 2)
    for z in np.geomspace(0.01, 100.0, 25):
        dual = derivative(weight, float(z), method="dual")
        central = derivative(weight, float(z))
        assert central == pytest.approx(dual, rel=1e-6, abs=1e-12)
