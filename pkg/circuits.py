"""
Lumped LC elements and lossless transmission lines.

All values are immutable and validated at construction. Derived quantities
are computed on demand.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

import settings
from errors import ConfigError


def _require_positive(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
    return value


@dataclass(frozen=True)
class PhysicalConstants:
    """Reduced Planck constant for the unit system in use."""

    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hbar", _require_positive("hbar", self.hbar))

    @classmethod
    def natural(cls) -> "PhysicalConstants":
        return cls(hbar=1.0)

    @classmethod
    def si(cls) -> "PhysicalConstants":
        return cls(hbar=settings.HBAR_SI)


@dataclass(frozen=True)
class TransmissionLineSpec:
    """
    Per-unit-length inductance L_T (H/m) and capacitance C_T (F/m) of a line.
    """

    inductance_per_length: float
    capacitance_per_length: float

    def __post_init__(self):
        object.__setattr__(self, "inductance_per_length",
                           _require_positive("L_T", self.inductance_per_length))
        object.__setattr__(self, "capacitance_per_length",
                           _require_positive("C_T", self.capacitance_per_length))

    @property
    def impedance(self) -> float:
        return math.sqrt(self.inductance_per_length / self.capacitance_per_length)

    @property
    def velocity(self) -> float:
        return 1.0 / math.sqrt(self.inductance_per_length * self.capacitance_per_length)

    @property
    def resistance(self) -> float:
        # A semi-infinite line loads its endpoint with its characteristic impedance.
        return self.impedance


@dataclass(frozen=True)
class EndpointLCSpec:
    """Lumped inductance L (H) and capacitance C (F) terminating a line."""

    inductance: float
    capacitance: float

    def __post_init__(self):
        object.__setattr__(self, "inductance", _require_positive("L", self.inductance))
        object.__setattr__(self, "capacitance", _require_positive("C", self.capacitance))

    @property
    def omega0(self) -> float:
        return 1.0 / math.sqrt(self.inductance * self.capacitance)


class LineQuantities(NamedTuple):
    impedance: float
    velocity: float
    resistance: float


def line_quantities(line: TransmissionLineSpec) -> LineQuantities:
    """Return (Z_T, v, R) of a line."""
    return LineQuantities(line.impedance, line.velocity, line.resistance)


def dispersion(line: TransmissionLineSpec, k):
    """
    Angular frequency omega_k = v * k of a line mode.

    Accepts a scalar or an array of wavenumbers; negative entries are rejected.
    """
    arr = np.asarray(k, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ConfigError(f"wavenumber must be finite and >= 0, got {k!r}")
    omega = line.velocity * arr
    if omega.ndim == 0:
        return float(omega)
    return omega


def cutoff_frequency(line: TransmissionLineSpec, cutoff: float) -> float:
    """omega_Lambda = (Lambda / L_T) * Z_T."""
    cutoff = _require_positive("cutoff", cutoff)
    return cutoff / line.inductance_per_length * line.impedance


def q_factor(ep: EndpointLCSpec, line: TransmissionLineSpec) -> float:
    """Quality factor (L / R) * omega0 = sqrt(L/C) * sqrt(C_T/L_T)."""
    return math.sqrt(ep.inductance / ep.capacitance) * math.sqrt(
        line.capacitance_per_length / line.inductance_per_length
    )


def lcr_roots(ep: EndpointLCSpec, resistance: float) -> np.ndarray:
    """
    Characteristic roots of L Q'' + R Q' + Q / C = 0.

    A complex-conjugate pair means the charge rings down; this happens
    exactly when sqrt(L / C) / R > 1/2.
    """
    resistance = _require_positive("R", resistance)
    roots = np.roots([ep.inductance, resistance, 1.0 / ep.capacitance])
    return np.sort_complex(roots.astype(complex))


class ModeCorrelators(NamedTuple):
    qq: np.ndarray
    pp: np.ndarray


def mode_correlators(line: TransmissionLineSpec, omega, hbar: float = 1.0) -> ModeCorrelators:
    """
    Vacuum two-point densities of the mode expansion,
    <Q_k Q_-k> = hbar / (2 L_T omega_k) and <Phi_k Phi_-k> = hbar L_T omega_k / 2.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(~np.isfinite(omega)) or np.any(omega <= 0):
        raise ConfigError(f"mode frequencies must be finite and > 0, got {omega!r}")
    hbar = _require_positive("hbar", hbar)
    lt = line.inductance_per_length
    return ModeCorrelators(hbar / (2.0 * lt * omega), lt * hbar * omega / 2.0)
