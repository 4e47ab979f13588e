"""
Input-output theory for transmission lines meeting at a junction.

Covers the single-line endpoint transfer function and reflection, the
multiport scattering matrix of a coupled junction, and the endpoint charge
variance in every Q-factor regime.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List

import numpy as np

from circuits import EndpointLCSpec, TransmissionLineSpec
from errors import (AsymmetricMatrixError, BranchError, ConfigError,
                    DimensionMismatchError, NotPositiveSemidefiniteError,
                    SingularJunctionError)
from numerics import SEMI_INFINITE, integrate
from report_log import emit_flag

logger = logging.getLogger("txholo.scattering")

PSD_RTOL = 1e-12
CRITICAL_BAND = 1e-12
BRANCH_RTOL = 1e-9


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
    return value


def validate_coupling_matrix(name: str, matrix, n: int) -> np.ndarray:
    """Check shape, exact symmetry and positive semi-definiteness."""
    m = np.array(matrix, dtype=float)
    if m.shape != (n, n):
        raise DimensionMismatchError(name, (n, n), m.shape)
    if not np.all(np.isfinite(m)):
        raise ConfigError(f"{name} has non-finite entries")
    asym = np.abs(m - m.T)
    if np.any(asym > 0):
        i, j = np.unravel_index(int(np.argmax(asym)), asym.shape)
        lo, hi = sorted((int(i), int(j)))
        raise AsymmetricMatrixError(name, (lo + 1, hi + 1), float(asym[i, j]))
    eigenvalues = np.linalg.eigvalsh(m)
    scale = float(np.max(np.abs(eigenvalues))) if n else 0.0
    worst = int(np.argmin(eigenvalues))
    if eigenvalues[worst] < -PSD_RTOL * scale:
        raise NotPositiveSemidefiniteError(name, worst + 1, float(eigenvalues[worst]))
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class JunctionSpec:
    """
    N semi-infinite lines joined at x=0 through a mutual-inductance matrix
    (H) and an elastance matrix (1/F).
    """

    lines: tuple
    mutual_inductance: np.ndarray
    elastance: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        lines = tuple(self.lines)
        if not lines:
            raise ConfigError("a junction needs at least one line")
        for idx, line in enumerate(lines, start=1):
            if not isinstance(line, TransmissionLineSpec):
                raise ConfigError(f"line {idx} is not a TransmissionLineSpec")
        n = len(lines)
        object.__setattr__(self, "lines", lines)
        object.__setattr__(self, "mutual_inductance",
                           validate_coupling_matrix("mutual_inductance", self.mutual_inductance, n))
        object.__setattr__(self, "elastance",
                           validate_coupling_matrix("elastance", self.elastance, n))
        object.__setattr__(self, "hbar", _positive("hbar", self.hbar))

    @classmethod
    def single_endpoint(cls, endpoint: EndpointLCSpec, line: TransmissionLineSpec,
                        hbar: float = 1.0) -> "JunctionSpec":
        return cls(
            lines=(line,),
            mutual_inductance=[[endpoint.inductance]],
            elastance=[[1.0 / endpoint.capacitance]],
            hbar=hbar,
        )

    @property
    def size(self) -> int:
        return len(self.lines)

    @property
    def resistances(self) -> np.ndarray:
        return np.array([line.resistance for line in self.lines])

    def __eq__(self, other):
        if not isinstance(other, JunctionSpec):
            return NotImplemented
        return (
            self.lines == other.lines
            and self.hbar == other.hbar
            and np.array_equal(self.mutual_inductance, other.mutual_inductance)
            and np.array_equal(self.elastance, other.elastance)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ScatterSample:
    """
    Scattering matrix at one frequency in the flux-normalized basis.

    s_matrix follows the published sign convention; raw_s_matrix is the
    direct solution of the junction equations (they differ by -1).
    """

    omega: float
    s_matrix: np.ndarray
    raw_s_matrix: np.ndarray

    def unitarity_error(self) -> float:
        n = self.s_matrix.shape[0]
        return float(np.max(np.abs(self.s_matrix.conj().T @ self.s_matrix - np.eye(n))))

    def reciprocity_error(self) -> float:
        return float(np.max(np.abs(self.s_matrix - self.s_matrix.T)))


class Regime(str, Enum):
    UNDERDAMPED = "underdamped"
    CRITICAL = "critical"
    OVERDAMPED = "overdamped"


@dataclass(frozen=True)
class QFactorRegime:
    q: float
    regime: Regime

    def __post_init__(self):
        q = _positive("q", self.q)
        object.__setattr__(self, "q", q)
        expected = _label(q)
        if Regime(self.regime) is not expected:
            raise ConfigError(f"regime {self.regime!r} inconsistent with q={q!r}")
        object.__setattr__(self, "regime", expected)

    @classmethod
    def classify(cls, q: float) -> "QFactorRegime":
        q = _positive("q", q)
        return cls(q, _label(q))


def _label(q: float) -> Regime:
    if abs(q - 0.5) <= CRITICAL_BAND:
        return Regime.CRITICAL
    return Regime.UNDERDAMPED if q > 0.5 else Regime.OVERDAMPED


def _as_regime(q) -> QFactorRegime:
    return q if isinstance(q, QFactorRegime) else QFactorRegime.classify(q)


def _endpoint_denominator(omega: float, ep: EndpointLCSpec, resistance: float) -> complex:
    return complex(omega * omega * ep.inductance - 1.0 / ep.capacitance, -omega * resistance)


def transfer_function(omega: float, ep: EndpointLCSpec, resistance: float) -> complex:
    """H(omega) = -1 / (omega^2 L - 1/C - i omega R)."""
    omega = float(omega)
    if not (math.isfinite(omega) and omega >= 0):
        raise ConfigError(f"omega must be finite and >= 0, got {omega!r}")
    if resistance < 0:
        raise ConfigError(f"R must be >= 0, got {resistance!r}")
    den = _endpoint_denominator(omega, ep, resistance)
    if den == 0:
        raise SingularJunctionError(omega, operation="transfer_function")
    return -1.0 / den


def single_line_s(omega: float, ep: EndpointLCSpec, resistance: float) -> complex:
    """S(omega) = (omega^2 L - 1/C + i omega R) / (omega^2 L - 1/C - i omega R)."""
    omega = float(omega)
    if not (math.isfinite(omega) and omega >= 0):
        raise ConfigError(f"omega must be finite and >= 0, got {omega!r}")
    den = _endpoint_denominator(omega, ep, resistance)
    if den == 0:
        raise SingularJunctionError(omega, operation="single_line_s")
    return den.conjugate() / den


def network_s_matrix(omega: float, j: JunctionSpec) -> ScatterSample:
    """
    Solve sum_j [-omega^2 L_ij + E_ij] Q_j + i omega R_i Q_i = 2 i omega R_i Q_i^in
    and return the map Q^in -> Q^out = Q - Q^in in the basis sqrt(R_i) Q_i.
    """
    omega = _positive("omega", omega)
    r = j.resistances
    a = -omega * omega * j.mutual_inductance + j.elastance + 1j * omega * np.diag(r)
    n = j.size
    d = np.sqrt(r)
    try:
        if np.linalg.cond(a) > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned")
        # Q = 2 i omega A^-1 R Q^in; in flux basis S = 2 i omega D A^-1 D - I.
        solved = np.linalg.solve(a, np.diag(d))
    except np.linalg.LinAlgError:
        raise SingularJunctionError(omega) from None
    raw = 2j * omega * (d[:, None] * solved) - np.eye(n)
    return ScatterSample(omega=omega, s_matrix=-raw, raw_s_matrix=raw)


def s_matrix_sweep(omegas: Iterable[float], j: JunctionSpec) -> List[ScatterSample]:
    return [network_s_matrix(w, j) for w in omegas]


def _variance_integrand(q: float):
    q2 = q * q

    def integrand(x):
        d = x * x - q2
        return x / (d * d + x * x)

    return integrand


def charge_variance_quadrature(q, resistance: float, hbar: float = 1.0) -> float:
    """
    (hbar / 2R) * integral_0^inf x / ((x^2 - q^2)^2 + x^2) dx by adaptive
    quadrature on the rationally mapped half-line.
    """
    regime = _as_regime(q)
    resistance = _positive("R", resistance)
    qv = regime.q
    result = integrate(_variance_integrand(qv), (0.0, math.inf), SEMI_INFINITE,
                       points=(qv, qv * qv), operation="charge_variance_quadrature")
    return hbar / (2.0 * resistance) * result.value


def charge_variance_closed(q, resistance: float, hbar: float = 1.0) -> float:
    """
    Closed-form endpoint charge variance.

    q > 1/2 uses (pi + 2 arctan((2q^2 - 1)/sqrt(4q^2 - 1))) / (2 sqrt(4q^2 - 1)).
    q < 1/2 evaluates the same arctan form with complex arithmetic on the
    principal branch and keeps the real part. q = 1/2 returns the
    continuity limit hbar / R.
    """
    regime = _as_regime(q)
    resistance = _positive("R", resistance)
    qv = regime.q
    prefactor = hbar / (2.0 * resistance)
    disc = 4.0 * qv * qv - 1.0

    if regime.regime is Regime.CRITICAL or abs(disc) < 1e-8:
        # Series of the q > 1/2 branch around disc = 0.
        return prefactor * (2.0 - 2.0 * disc / 3.0 + 2.0 * disc * disc / 5.0)

    if disc > 0:
        root = math.sqrt(disc)
        value = (math.pi + 2.0 * math.atan((2.0 * qv * qv - 1.0) / root)) / (2.0 * root)
        return prefactor * value

    root = np.sqrt(complex(disc))
    value = complex(np.arctan(root / (1.0 - 2.0 * qv * qv)) / root)
    if abs(value.imag) > BRANCH_RTOL * max(abs(value.real), 1e-300):
        raise BranchError(
            f"imaginary residue {value.imag:.3e} at q={qv!r}",
            operation="charge_variance_closed", best_estimate=value.real,
        )
    return prefactor * value.real


def published_charge_variance(q, resistance: float, hbar: float = 1.0) -> float:
    """
    The branch values as printed in the published formula, for discrepancy
    reports only: pi*hbar/2R at q = 1/2 and the real part of the literal
    q < 1/2 branch.
    """
    regime = _as_regime(q)
    resistance = _positive("R", resistance)
    qv = regime.q
    prefactor = hbar / (2.0 * resistance)
    if regime.regime is Regime.CRITICAL:
        return math.pi * hbar / (2.0 * resistance)
    if regime.regime is Regime.UNDERDAMPED:
        return charge_variance_closed(regime, resistance, hbar)
    e = math.sqrt(1.0 - 4.0 * qv * qv)
    a = 1.0 - 2.0 * qv * qv
    # Literal branch: (i pi + 2 arctan(a/e)) / (2e); its real part.
    return prefactor * math.atan(a / e) / e


def large_q_ratio(q, resistance: float, hbar: float = 1.0) -> float:
    """Delta Q^2 * 4 R q / (pi hbar); tends to 1 as q grows."""
    regime = _as_regime(q)
    variance = charge_variance_quadrature(regime, resistance, hbar)
    return variance * 4.0 * resistance * regime.q / (math.pi * hbar)


def report_variance_discrepancies(q, resistance: float, hbar: float = 1.0,
                                  large_q: float = 10.0) -> None:
    """Raise report flags where the published branch values disagree with the integral."""
    regime = _as_regime(q)
    qv = regime.q
    if regime.regime is Regime.CRITICAL:
        emit_flag(
            logger, "critical_q_value",
            "published q=1/2 value pi*hbar/2R disagrees with direct integration (hbar/R)",
            q=qv, published=published_charge_variance(regime, resistance, hbar),
            integrated=charge_variance_quadrature(regime, resistance, hbar),
        )
    elif regime.regime is Regime.OVERDAMPED:
        emit_flag(
            logger, "overdamped_branch",
            "published q<1/2 branch is not real on the principal branch; "
            "complex evaluation of the arctan form is reported",
            q=qv, published_real_part=published_charge_variance(regime, resistance, hbar),
            integrated=charge_variance_quadrature(regime, resistance, hbar),
        )
    if qv >= large_q:
        emit_flag(
            logger, "large_q_limit",
            "published large-q limit pi*hbar/4R omits the 1/q factor",
            q=qv, published=math.pi * hbar / (4.0 * resistance),
            ratio_to_pi_hbar_over_4Rq=large_q_ratio(regime, resistance, hbar),
        )


def gamma_factor(q: float, lambda_cutoff: float, ratio_lt_over_l: float) -> float:
    """gamma = (1/q) * sqrt(L * Lambda / L_T)."""
    q = _positive("q", q)
    return math.sqrt(_positive("lambda_cutoff", lambda_cutoff)
                     / _positive("lt_over_l", ratio_lt_over_l)) / q


def cmera_weighted_variance(q, gamma: float, lambda_cutoff: float,
                            ratio_lt_over_l: float, resistance: float,
                            hbar: float = 1.0) -> float:
    """
    gamma * (hbar/2R) * integral_0^inf x / ((x^2 - q^2)^2 + x^2)
    / sqrt(1 + (L_T/L) (x^2 / q^2) / Lambda) dx.

    Converges to gamma * charge_variance_closed(q) as Lambda grows.
    """
    regime = _as_regime(q)
    qv = regime.q
    gamma = _positive("gamma", gamma)
    lam = _positive("lambda_cutoff", lambda_cutoff)
    ratio = _positive("lt_over_l", ratio_lt_over_l)
    resistance = _positive("R", resistance)
    base = _variance_integrand(qv)
    coeff = ratio / (qv * qv * lam)

    def integrand(x):
        return base(x) / math.sqrt(1.0 + coeff * x * x)

    result = integrate(integrand, (0.0, math.inf), SEMI_INFINITE,
                       points=(qv, qv * qv), operation="cmera_weighted_variance")
    return gamma * hbar / (2.0 * resistance) * result.value


def report_weighted_variance_form() -> None:
    emit_flag(
        logger, "weighted_variance_form",
        "published weighted-variance result writes (-1+2q) where the endpoint "
        "branch has (-1+2q^2); the (-1+2q^2) form is used",
    )
