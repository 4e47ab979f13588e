"""
Emergent geometry of the endpoint-coupled line.

The bulk metric is conformally flat,
    ds^2 = w(z) (dz^2 + dx^2 - dt^2),  w(z) = z^2 / (4 (z^2 + beta eps^2)^2),
which is AdS3 of radius 1/2 at beta = 0. Curvature is computed from the
metric and its first two z-derivatives with no finite differences.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from errors import ConfigError, DimensionMismatchError, NumericalError
from numerics import Jet, QuadratureSpec, integrate, jet_derivatives
from report_log import emit_flag

logger = logging.getLogger("txholo.holography")

SIGNATURE = np.array([1.0, 1.0, -1.0])
MIN_Z_SAMPLES = 16
LOST_MASS_LIMIT = 0.01
GRID_RTOL = 1e-9
CONTINUITY_RTOL = 1e-8


@dataclass(frozen=True)
class MetricFamily:
    """
    beta multiplies eps^2 / z^2 in the conformal weight; at the endpoint it
    is L_T / (L * Lambda).
    """

    beta: float
    epsilon: float = 1.0

    def __post_init__(self):
        beta, eps = float(self.beta), float(self.epsilon)
        if not (math.isfinite(beta) and beta >= 0):
            raise ConfigError(f"beta must be finite and >= 0, got {self.beta!r}")
        if not (math.isfinite(eps) and eps > 0):
            raise ConfigError(f"epsilon must be finite and > 0, got {self.epsilon!r}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "epsilon", eps)

    @property
    def p(self) -> float:
        return self.beta * self.epsilon ** 2

    def to_propagator_form(self) -> float:
        """Coefficient beta_hat of z^2 in the propagator weight (1 + beta_hat z^2)."""
        return self.beta / self.epsilon ** 2

    def z_from_u(self, u, sign: int = -1):
        """z = eps * exp(sign * u); both signs appear in the literature."""
        _check_sign(sign)
        return self.epsilon * np.exp(sign * np.asarray(u, dtype=float))

    def u_from_z(self, z, sign: int = -1):
        _check_sign(sign)
        return sign * np.log(_positive_z(z) / self.epsilon)


def _check_sign(sign: int):
    if sign not in (-1, 1):
        raise ConfigError(f"sign must be -1 or +1, got {sign!r}")


def _positive_z(z) -> np.ndarray:
    arr = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ConfigError(f"z must be finite and > 0, got {z!r}")
    return arr


def weight(z, fam: MetricFamily):
    """Conformal factor w(z); accepts Jets."""
    d = z * z + fam.p
    return z * z / (4.0 * d * d)


def weight_derivatives(z, fam: MetricFamily) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(w, w', w'') from the hand-derived closed forms."""
    z = _positive_z(z)
    p = fam.p
    d = z * z + p
    w = z * z / (4.0 * d * d)
    w1 = z * (p - z * z) / (2.0 * d ** 3)
    w2 = (3.0 * z ** 4 - 8.0 * p * z * z + p * p) / (2.0 * d ** 4)
    return w, w1, w2


def weight_derivatives_dual(z, fam: MetricFamily) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(w, w', w'') by forward-mode propagation through weight()."""
    z = _positive_z(z)
    return jet_derivatives(lambda x: weight(x, fam), z)


def metric_at(z: float, fam: MetricFamily) -> np.ndarray:
    """Diagonal (g_zz, g_xx, g_tt)."""
    w = weight(float(_positive_z(z)), fam)
    return w * SIGNATURE


class CurvatureReport(NamedTuple):
    """Per-z diagonal tensors (columns z, x, t) and scalars."""

    z: np.ndarray
    metric: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    einstein: np.ndarray
    lam: np.ndarray
    stress: np.ndarray
    continuity: np.ndarray


def christoffel(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma^a_bc from g_ab and dg[e, a, b] = d_e g_ab."""
    ginv = np.linalg.inv(g)
    s = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    return 0.5 * np.einsum("ad,dbc->abc", ginv, s)


def ricci_tensor(g: np.ndarray, dg: np.ndarray, ddg: np.ndarray) -> np.ndarray:
    """
    Ricci tensor from the metric and its first and second coordinate
    derivatives, ddg[e, f, a, b] = d_e d_f g_ab.
    """
    ginv = np.linalg.inv(g)
    gamma = christoffel(g, dg)
    dginv = -np.einsum("af,efh,hd->ead", ginv, dg, ginv)
    s = np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg
    ds = (np.einsum("ebdc->edbc", ddg) + np.einsum("ecdb->edbc", ddg) - ddg)
    dgamma = 0.5 * (np.einsum("ead,dbc->eabc", dginv, s)
                    + np.einsum("ad,edbc->eabc", ginv, ds))
    riemann = (np.einsum("cadb->abcd", dgamma) - np.einsum("dacb->abcd", dgamma)
               + np.einsum("ace,edb->abcd", gamma, gamma)
               - np.einsum("ade,ecb->abcd", gamma, gamma))
    return np.einsum("abad->bd", riemann)


def _metric_tensors(w: float, w1: float, w2: float):
    g = np.diag(w * SIGNATURE)
    dg = np.zeros((3, 3, 3))
    dg[0] = np.diag(w1 * SIGNATURE)
    ddg = np.zeros((3, 3, 3, 3))
    ddg[0, 0] = np.diag(w2 * SIGNATURE)
    return g, dg, ddg


def covariant_divergence(g: np.ndarray, dg: np.ndarray, t: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """
    g^{mu nu} nabla_nu T_{mu rho} for a symmetric T_ab with coordinate
    derivatives dt[e, a, b] = d_e T_ab.
    """
    ginv = np.linalg.inv(g)
    gamma = christoffel(g, dg)
    nabla = (dt - np.einsum("snm,sr->nmr", gamma, t)
             - np.einsum("snr,ms->nmr", gamma, t))
    return np.einsum("mn,nmr->r", ginv, nabla)


def _log_weight_slopes(z, p):
    # phi' and phi'' of phi = log(w) / 2; plain arithmetic so Jets pass
    d = z * z + p
    phi1 = 1.0 / z - 2.0 * z / d
    phi2 = -1.0 / (z * z) - 2.0 * (p - z * z) / (d * d)
    return phi1, phi2


def scalar_curvature_conformal(z, fam: MetricFamily):
    """R = -4 exp(-2 phi) (phi'' + phi'^2 / 2) with exp(2 phi) = w."""
    z = _positive_z(z)
    phi1, phi2 = _log_weight_slopes(z, fam.p)
    return -4.0 / weight(z, fam) * (phi2 + 0.5 * phi1 * phi1)


def einstein_conformal(z, fam: MetricFamily) -> np.ndarray:
    """Diagonal Einstein tensor (phi'^2, phi'', -phi'') of the conformally flat metric."""
    z = _positive_z(z)
    phi1, phi2 = _log_weight_slopes(z, fam.p)
    return np.stack([phi1 * phi1, phi2, -phi2], axis=-1)


def _lambda_formula(z, beta_hat: float):
    y = beta_hat * z * z
    return -4.0 * (1.0 + y + 2.0 * y * y) / (1.0 + y)


def lambda_published(z, fam: MetricFamily):
    """
    Published lambda(z) = -4 (1 + y + 2 y^2) / (1 + y) with y the z^2-form
    coupling. It reduces to -4 at beta = 0 and varies with z otherwise.
    """
    return _lambda_formula(_positive_z(z), fam.to_propagator_form())


def _stress_slope(z: np.ndarray, fam: MetricFamily, w: np.ndarray, w1: np.ndarray) -> np.ndarray:
    # d/dz of T = G + lambda g, with G and lambda pushed through Jets
    zj = Jet.variable(z)
    phi1, phi2 = _log_weight_slopes(zj, fam.p)
    e_zz = phi1 * phi1
    lam = _lambda_formula(zj, fam.to_propagator_form())
    d_einstein = np.stack([e_zz.d1, phi2.d1, -phi2.d1], axis=-1)
    d_metric = (lam.d1 * w + lam.value * w1)[:, None] * SIGNATURE
    return d_einstein + d_metric


def curvature_report(fam: MetricFamily, z_grid: Sequence[float],
                     method: str = "analytic") -> CurvatureReport:
    """
    Curvature of the metric family on a z-grid.

    lambda(z) is the published formula and T = G + lambda g (kappa = 1).
    ``continuity`` holds g^{mu nu} nabla_nu T_{mu rho} per sample; it
    vanishes only where lambda is constant, and anything larger than
    rounding is flagged ``continuity_violation``.
    """
    z = np.asarray(z_grid, dtype=float)
    if z.ndim != 1 or z.size < MIN_Z_SAMPLES:
        raise ConfigError(f"z-grid needs at least {MIN_Z_SAMPLES} samples, got {z.size}")
    if np.any(~np.isfinite(z)) or np.any(z <= 0):
        raise ConfigError("z-grid must stay strictly above z = 0")
    if method == "analytic":
        w, w1, w2 = weight_derivatives(z, fam)
    elif method == "dual":
        w, w1, w2 = weight_derivatives_dual(z, fam)
    else:
        raise ConfigError(f"unknown differentiation method {method!r}")

    n = z.size
    metric = np.empty((n, 3))
    ricci = np.empty((n, 3))
    scalar = np.empty(n)
    for i in range(n):
        g, dg, ddg = _metric_tensors(float(w[i]), float(w1[i]), float(w2[i]))
        ric = ricci_tensor(g, dg, ddg)
        metric[i] = np.diag(g)
        ricci[i] = np.diag(ric)
        scalar[i] = float(np.einsum("ab,ab->", np.linalg.inv(g), ric))

    einstein = ricci - 0.5 * metric * scalar[:, None]
    lam = lambda_published(z, fam)
    stress = einstein + lam[:, None] * metric

    d_stress = _stress_slope(z, fam, w, w1)
    continuity = np.empty((n, 3))
    for i in range(n):
        g, dg, _ = _metric_tensors(float(w[i]), float(w1[i]), float(w2[i]))
        dt = np.zeros((3, 3, 3))
        dt[0] = np.diag(d_stress[i])
        continuity[i] = covariant_divergence(g, dg, np.diag(stress[i]), dt)

    worst = float(np.max(np.abs(continuity)))
    if worst > CONTINUITY_RTOL * max(1.0, float(np.max(np.abs(scalar)))):
        emit_flag(
            logger, "continuity_violation",
            "published lambda(z) varies with z, so T = G + lambda g is not conserved "
            "(the Einstein tensor is divergence-free, leaving d lambda / dz)",
            beta=fam.beta, max_divergence=worst,
        )
    logger.info("curvature report over %d z-samples (beta=%g)", n, fam.beta)
    return CurvatureReport(z, metric, ricci, scalar, einstein, lam, stress, continuity)


def bulk_propagator(z, beta_hat: float, c: float = 1.0):
    """K(z) = c (1 + beta_hat z^2 / 2) z^2; accepts Jets."""
    return c * (1.0 + 0.5 * beta_hat * z * z) * z * z


def radial_flux(z, beta_hat: float, c: float = 1.0):
    """(1 / (2 z (1 + beta_hat z^2))) dK/dz, constant (= c) on solutions."""
    z = _positive_z(z)
    _, k1, _ = jet_derivatives(lambda x: bulk_propagator(x, beta_hat, c), z)
    return k1 / (2.0 * z * (1.0 + beta_hat * z * z))


def flux_residual(z, beta_hat: float, c: float = 1.0):
    """d/dz of the radial flux; zero for the propagator."""
    z = _positive_z(z)
    _, k1, k2 = jet_derivatives(lambda x: bulk_propagator(x, beta_hat, c), z)
    h = 2.0 * z * (1.0 + beta_hat * z * z)
    h1 = 2.0 + 6.0 * beta_hat * z * z
    return (k2 * h - k1 * h1) / (h * h)


@dataclass(frozen=True, eq=False)
class BoundaryField:
    """phi0 sampled on a uniform rectangular (x, t) grid; values[i, j] = phi0(x_i, t_j)."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        t = np.asarray(self.t, dtype=float)
        values = np.asarray(self.values, dtype=float)
        for name, axis in (("x", x), ("t", t)):
            _check_uniform(name, axis)
        if values.shape != (x.size, t.size):
            raise DimensionMismatchError("boundary values", (x.size, t.size), values.shape)
        if not np.all(np.isfinite(values)):
            raise ConfigError("boundary values must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, phi0: Callable, x: Sequence[float], t: Sequence[float]) -> "BoundaryField":
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        xx, tt = np.meshgrid(x, t, indexing="ij")
        return cls(x, t, np.broadcast_to(phi0(xx, tt), xx.shape).astype(float))

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "BoundaryField":
        """Read (x, t, phi0) rows covering a full uniform grid."""
        try:
            frame = pd.read_csv(path)
        except FileNotFoundError:
            raise ConfigError(f"boundary file not found: {path}") from None
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise ConfigError(f"{path}: cannot parse boundary CSV: {exc}") from None
        missing = {"x", "t", "phi0"} - set(frame.columns)
        if missing:
            raise ConfigError(f"{path}: missing columns {sorted(missing)}")
        if frame[["x", "t"]].duplicated().any():
            row = int(np.flatnonzero(frame[["x", "t"]].duplicated().to_numpy())[0])
            raise ConfigError(f"{path}: duplicate (x, t) sample at data row {row + 1}")
        table = frame.pivot(index="x", columns="t", values="phi0").sort_index().sort_index(axis=1)
        if table.isna().to_numpy().any():
            raise ConfigError(f"{path}: boundary samples do not cover a rectangular grid")
        return cls(table.index.to_numpy(dtype=float), table.columns.to_numpy(dtype=float),
                   table.to_numpy(dtype=float))

    def to_frame(self) -> pd.DataFrame:
        xx, tt = np.meshgrid(self.x, self.t, indexing="ij")
        return pd.DataFrame({"x": xx.ravel(), "t": tt.ravel(), "phi0": self.values.ravel()})


def _check_uniform(name: str, axis: np.ndarray):
    if axis.ndim != 1 or axis.size < 2:
        raise ConfigError(f"boundary {name} axis needs at least 2 samples")
    steps = np.diff(axis)
    if np.any(steps <= 0):
        raise ConfigError(f"boundary {name} axis must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > GRID_RTOL * abs(steps[0]):
        bad = int(np.argmax(np.abs(steps - steps[0])))
        raise ConfigError(f"boundary {name} axis is not uniform at sample {bad + 1}")


class BulkValue(NamedTuple):
    value: float
    lost_mass_fraction: float


def boundary_kernel(z: float, r2, beta_hat: float, c: float = 1.0):
    """c [1 + (beta_hat/2) z^2 / (z^2 + r^2)^2] z^2 / (z^2 + r^2)^2."""
    d = (z * z + r2) ** 2
    return c * (1.0 + 0.5 * beta_hat * z * z / d) * z * z / d


def kernel_total_mass(z: float, beta_hat: float, c: float = 1.0) -> float:
    """Integral of the kernel over the whole plane: c (pi + pi beta_hat / (6 z^2))."""
    return c * (math.pi + math.pi * beta_hat / (6.0 * z * z))


def boundary_to_bulk(phi0: BoundaryField, point: Tuple[float, float, float],
                     fam: MetricFamily, c: float = 1.0) -> BulkValue:
    """
    Bulk field at (z, x, t) from boundary data, by 2-D trapezoid quadrature
    of the kernel against phi0 with the Euclidean distance |x - x'|^2 on
    the (x, t) plane.
    """
    z, x0, t0 = (float(v) for v in point)
    _positive_z(z)
    beta_hat = fam.to_propagator_form()
    dx = phi0.x - x0
    dt = phi0.t - t0
    r2 = dx[:, None] ** 2 + dt[None, :] ** 2
    kernel = boundary_kernel(z, r2, beta_hat, c)

    value = trapezoid(trapezoid(kernel * phi0.values, phi0.t, axis=1), phi0.x)
    captured = trapezoid(trapezoid(kernel, phi0.t, axis=1), phi0.x)
    lost = max(0.0, 1.0 - captured / kernel_total_mass(z, beta_hat, c))
    if lost > LOST_MASS_LIMIT:
        emit_flag(
            logger, "kernel_truncated",
            f"boundary grid captures only {100 * (1 - lost):.2f}% of the kernel mass",
            z=z, x=x0, t=t0, lost_mass_fraction=lost,
        )
    return BulkValue(float(value), float(lost))


def geodesic_log_length(a: float, xi: float) -> float:
    """Radial length log(xi / a) of the AdS geodesic between cutoffs a < xi."""
    a, xi = _cutoffs(a, xi)
    return math.log(xi) - math.log(a)


def geodesic_log_length_quadrature(a: float, xi: float) -> float:
    """Same length by quadrature of ds = dz / z."""
    a, xi = _cutoffs(a, xi)
    spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-13)
    result = integrate(lambda z: 1.0 / z, (a, xi), spec, operation="geodesic_log_length")
    closed = math.log(xi) - math.log(a)
    if abs(result.value - closed) > 1e-10 * max(1.0, abs(closed)):
        raise NumericalError(
            f"quadrature {result.value!r} disagrees with closed form {closed!r}",
            operation="geodesic_log_length", best_estimate=result.value,
        )
    return result.value


def _cutoffs(a: float, xi: float) -> Tuple[float, float]:
    a, xi = float(a), float(xi)
    if not (math.isfinite(a) and math.isfinite(xi) and 0 < a < xi):
        raise ConfigError(f"need 0 < a < xi, got a={a!r} xi={xi!r}")
    return a, xi
