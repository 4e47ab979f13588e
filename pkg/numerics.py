"""
Shared numerical kernels: adaptive quadrature, convex scalar minimization,
numeric differentiation and second-order forward-mode dual numbers.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from errors import ConfigError, ConvergenceError, QuadratureError

logger = logging.getLogger("txholo.numerics")

TRANSFORMS = ("none", "semi_infinite_rational")


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and domain transform for one integrate() call."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    transform: str = "none"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigError(
                f"quadrature tolerances must be > 0, got abs={self.abs_tol} rel={self.rel_tol}"
            )
        if int(self.max_subdivisions) < 1:
            raise ConfigError(f"max_subdivisions must be >= 1, got {self.max_subdivisions}")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"unknown quadrature transform {self.transform!r}")


SEMI_INFINITE = QuadratureSpec(transform="semi_infinite_rational")


class QuadratureResult(NamedTuple):
    value: float
    error: float


def _to_unit_interval(x: float) -> float:
    return x / (1.0 + x)


def integrate(f: Callable[[float], float], domain: Tuple[float, float],
              spec: Optional[QuadratureSpec] = None,
              points: Optional[Sequence[float]] = None,
              operation: str = "integrate") -> QuadratureResult:
    """
    Integrate a scalar function over a finite or semi-infinite interval.

    With the ``semi_infinite_rational`` transform the domain must be
    [0, inf); it is mapped onto [0, 1) via x = t / (1 - t) and breakpoints
    are mapped along with it.

    Args:
        f: Integrand
        domain: (lower, upper); upper may be math.inf
        spec: Tolerances and transform, defaults to QuadratureSpec()
        points: Interior points where the integrand varies quickly
        operation: Name reported in a QuadratureError

    Returns:
        (value, error_estimate)
    """
    spec = spec or QuadratureSpec()
    lower, upper = float(domain[0]), float(domain[1])

    if spec.transform == "semi_infinite_rational":
        if lower != 0.0 or not math.isinf(upper):
            raise ConfigError(
                f"semi_infinite_rational transform needs domain [0, inf), got {domain!r}"
            )

        def integrand(t):
            s = 1.0 - t
            return f(t / s) / (s * s)

        a, b = 0.0, 1.0
        mapped = None
        if points:
            mapped = sorted({_to_unit_interval(p) for p in points if 0.0 < p < math.inf})
    else:
        integrand = f
        a, b = lower, upper
        mapped = None
        if points:
            mapped = sorted(p for p in points if a < p < b)
        if math.isinf(a) or math.isinf(b):
            # QUADPACK's infinite-range rules do not accept breakpoints.
            mapped = None

    out = sp_integrate.quad(
        integrand, a, b,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=int(spec.max_subdivisions),
        points=mapped or None,
        full_output=1,
    )
    value, error = float(out[0]), float(out[1])
    failed = len(out) > 3
    if failed or not math.isfinite(value) or error > max(spec.abs_tol, spec.rel_tol * abs(value)):
        message = out[3] if failed else "error estimate above tolerance"
        logger.info("quadrature failed in %s: %s", operation, message)
        raise QuadratureError(
            f"quadrature did not converge ({message}); error estimate {error:.3e}",
            operation=operation, best_estimate=value,
        )
    return QuadratureResult(value, error)


def minimize_scalar(g: Callable[[float], float], bracket: Tuple[float, float],
                    tol: float = 1e-12,
                    dg: Optional[Callable[[float], float]] = None,
                    max_iter: int = 200) -> float:
    """
    Minimize a strictly convex scalar function by bisection on its derivative.

    Args:
        g: Objective
        bracket: Interval whose endpoints have derivatives of opposite sign
        tol: Absolute tolerance on the argmin
        dg: Analytic derivative; central differences of g when omitted
        max_iter: Bisection iteration budget
    """
    slope = dg if dg is not None else (lambda x: derivative(g, x, order=1))
    a, b = float(bracket[0]), float(bracket[1])
    if not a < b:
        raise ConfigError(f"bracket must satisfy a < b, got {bracket!r}")

    sa, sb = slope(a), slope(b)
    if sa == 0.0:
        return a
    if sb == 0.0:
        return b
    if np.sign(sa) == np.sign(sb):
        raise ConfigError(
            f"bracket {bracket!r} does not contain a stationary point "
            f"(slopes {sa:.3e}, {sb:.3e})"
        )
    try:
        return float(optimize.bisect(slope, a, b, xtol=tol, maxiter=max_iter))
    except RuntimeError as exc:
        raise ConvergenceError(str(exc), operation="minimize_scalar") from exc


def central_step(x: float, order: int) -> float:
    if order == 1:
        return max(1e-6, 1e-6 * abs(x))
    # Second differences lose sqrt(eps) more to rounding.
    return max(1e-4, 1e-4 * abs(x))


def derivative(f: Callable, x: float, order: int = 1, method: str = "central") -> float:
    """
    First or second derivative of f at x.

    ``method="central"`` uses central differences, ``method="dual"`` pushes a
    Jet through f and is exact for closed forms built from Jet operations.
    """
    if order not in (1, 2):
        raise ConfigError(f"derivative order must be 1 or 2, got {order}")
    if method == "dual":
        _, d1, d2 = jet_derivatives(f, x)
        return d1 if order == 1 else d2
    if method != "central":
        raise ConfigError(f"unknown differentiation method {method!r}")

    h = central_step(x, order)
    if order == 1:
        return (f(x + h) - f(x - h)) / (2.0 * h)
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)


class Jet:
    """
    Truncated Taylor expansion (value, first, second) of a quantity with
    respect to one seed variable.

    Components may be floats or numpy arrays.
    """

    __slots__ = ("value", "d1", "d2")
    __array_ufunc__ = None

    def __init__(self, value, d1=0.0, d2=0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def variable(cls, x):
        return cls(x, np.ones_like(x, dtype=float) if np.ndim(x) else 1.0, 0.0)

    @staticmethod
    def lift(other) -> "Jet":
        return other if isinstance(other, Jet) else Jet(other, 0.0, 0.0)

    def _chain(self, f0, f1, f2) -> "Jet":
        return Jet(f0, f1 * self.d1, f2 * self.d1 * self.d1 + f1 * self.d2)

    def __repr__(self):
        return f"Jet({self.value!r}, {self.d1!r}, {self.d2!r})"

    def __neg__(self):
        return Jet(-self.value, -self.d1, -self.d2)

    def __pos__(self):
        return self

    def __add__(self, other):
        o = Jet.lift(other)
        return Jet(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)

    __radd__ = __add__

    def __sub__(self, other):
        o = Jet.lift(other)
        return Jet(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)

    def __rsub__(self, other):
        return Jet.lift(other) - self

    def __mul__(self, other):
        o = Jet.lift(other)
        return Jet(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        inv = 1.0 / self.value
        return self._chain(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        return self * Jet.lift(other).reciprocal()

    def __rtruediv__(self, other):
        return Jet.lift(other) * self.reciprocal()

    def __pow__(self, n):
        if isinstance(n, Jet):
            return (n * self.log()).exp()
        if n == 0:
            return Jet(np.ones_like(self.value, dtype=float) if np.ndim(self.value) else 1.0)
        v = self.value
        return self._chain(v ** n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))

    def __rpow__(self, base):
        return (self * math.log(base)).exp()

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self._chain(e, e, e)

    def log(self) -> "Jet":
        v = self.value
        return self._chain(np.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self) -> "Jet":
        r = np.sqrt(self.value)
        return self._chain(r, 0.5 / r, -0.25 / (r * self.value))


def jexp(x):
    return x.exp() if isinstance(x, Jet) else np.exp(x)


def jlog(x):
    return x.log() if isinstance(x, Jet) else np.log(x)


def jsqrt(x):
    return x.sqrt() if isinstance(x, Jet) else np.sqrt(x)


def jet_derivatives(f: Callable, x) -> Tuple[float, float, float]:
    """Return (f(x), f'(x), f''(x)) by forward-mode propagation."""
    out = f(Jet.variable(x))
    if not isinstance(out, Jet):
        zero = np.zeros_like(out, dtype=float) if np.ndim(out) else 0.0
        return out, zero, zero
    return out.value, out.d1, out.d2
