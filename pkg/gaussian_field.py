"""
Second-moment description of the line's field state on a discrete mode grid.

Each mode k carries <QQ>, <PhiPhi> and the symmetrized <QPhi> densities.
The continuum delta(k+k') factor is divided out, so every quantity here is
a per-mode density.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from circuits import (PhysicalConstants, TransmissionLineSpec, cutoff_frequency,
                      dispersion, mode_correlators)
from errors import ConfigError, DimensionMismatchError
from numerics import integrate

logger = logging.getLogger("txholo.gaussian_field")

HEISENBERG_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Wavenumber samples 0 < k_1 < ... < k_N <= cutoff."""

    cutoff: float
    k: np.ndarray

    def __post_init__(self):
        cutoff = float(self.cutoff)
        k = np.array(self.k, dtype=float)
        if not (math.isfinite(cutoff) and cutoff > 0):
            raise ConfigError(f"cutoff must be finite and > 0, got {self.cutoff!r}")
        if k.ndim != 1 or k.size < 2:
            raise ConfigError(f"mode grid needs at least 2 samples, got {k.size}")
        if not np.all(np.isfinite(k)) or k[0] <= 0:
            raise ConfigError("mode grid samples must be finite and > 0")
        if np.any(np.diff(k) <= 0):
            raise ConfigError("mode grid samples must be strictly increasing")
        if k[-1] > cutoff * (1 + 1e-15):
            raise ConfigError(f"mode grid sample {k[-1]!r} exceeds cutoff {cutoff!r}")
        k.setflags(write=False)
        object.__setattr__(self, "cutoff", cutoff)
        object.__setattr__(self, "k", k)

    @classmethod
    def log_uniform(cls, cutoff: float, u_min: float, n: int) -> "ModeGrid":
        """n samples k = cutoff * exp(s) with s uniform on [u_min, 0]."""
        if u_min >= 0:
            raise ConfigError(f"u_min must be negative, got {u_min!r}")
        s = np.linspace(float(u_min), 0.0, int(n))
        k = float(cutoff) * np.exp(s)
        k[-1] = float(cutoff)
        return cls(cutoff, k)

    @property
    def count(self) -> int:
        return int(self.k.size)

    @property
    def scales(self) -> np.ndarray:
        """Boundary scale s = log(k / cutoff) of every mode."""
        return np.log(self.k / self.cutoff)

    def same_as(self, other: "ModeGrid") -> bool:
        return self is other or (
            self.cutoff == other.cutoff
            and self.k.shape == other.k.shape
            and bool(np.array_equal(self.k, other.k))
        )


def _require_same_grid(a: ModeGrid, b: ModeGrid, what: str):
    if not a.same_as(b):
        raise DimensionMismatchError(what, (a.count,), (b.count,))


@dataclass(frozen=True, eq=False)
class GaussianModeState:
    """
    Per-mode second moments of a zero-mean Gaussian state.

    qq, pp and qp_sym are arrays over grid.k.
    """

    grid: ModeGrid
    qq: np.ndarray
    pp: np.ndarray
    qp_sym: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        n = self.grid.count
        arrays = {}
        for name in ("qq", "pp", "qp_sym"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (n,)).copy()
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} must be finite on every mode")
            arr.setflags(write=False)
            arrays[name] = arr
        if np.any(arrays["qq"] <= 0) or np.any(arrays["pp"] <= 0):
            raise ConfigError("qq and pp must be > 0 on every mode")
        bound = (self.hbar / 2.0) ** 2
        products = arrays["qq"] * arrays["pp"] - arrays["qp_sym"] ** 2
        worst = int(np.argmin(products))
        if products[worst] < bound * (1.0 - HEISENBERG_RTOL):
            raise ConfigError(
                f"mode {worst} violates the uncertainty bound: "
                f"{products[worst]!r} < (hbar/2)^2 = {bound!r}"
            )
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "hbar", float(self.hbar))


@dataclass(frozen=True, eq=False)
class SqueezeProfile:
    """
    Accumulated squeeze exponent f(k) at flow scale u.

    u=None denotes the end of the flow (u_IR). chi, when known, is the
    entangler strength the profile was built from.
    """

    grid: ModeGrid
    f: np.ndarray
    u: Optional[float] = None
    chi: Optional[Callable[[float], float]] = field(default=None, repr=False)

    def __post_init__(self):
        f = np.broadcast_to(np.asarray(self.f, dtype=float), (self.grid.count,)).copy()
        if not np.all(np.isfinite(f)):
            raise ConfigError("squeeze exponent must be finite on the grid")
        if self.u is not None:
            if self.u > 0:
                raise ConfigError(f"flow scale u must be <= 0, got {self.u!r}")
            if self.u == 0 and np.any(f != 0):
                raise ConfigError("squeeze exponent must vanish at u = 0")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @classmethod
    def uniform(cls, grid: ModeGrid, value: float) -> "SqueezeProfile":
        return cls(grid, np.full(grid.count, float(value)))


def ir_vacuum(line: TransmissionLineSpec, grid: ModeGrid,
              consts: Optional[PhysicalConstants] = None) -> GaussianModeState:
    """Unentangled product state with every mode at the cutoff frequency."""
    consts = consts or PhysicalConstants.natural()
    omega_cut = np.full(grid.count, cutoff_frequency(line, grid.cutoff))
    qq, pp = mode_correlators(line, omega_cut, consts.hbar)
    return GaussianModeState(grid=grid, qq=qq, pp=pp, qp_sym=np.zeros(grid.count), hbar=consts.hbar)


def line_vacuum(line: TransmissionLineSpec, grid: ModeGrid,
                consts: Optional[PhysicalConstants] = None) -> GaussianModeState:
    """Ground state of the free line, each mode at its own omega_k."""
    consts = consts or PhysicalConstants.natural()
    qq, pp = mode_correlators(line, dispersion(line, grid.k), consts.hbar)
    return GaussianModeState(grid=grid, qq=qq, pp=pp, qp_sym=np.zeros(grid.count), hbar=consts.hbar)


def apply_squeeze(state: GaussianModeState, prof: SqueezeProfile) -> GaussianModeState:
    """Rescale Q by exp(-f) and Phi by exp(+f) mode by mode."""
    _require_same_grid(state.grid, prof.grid, "squeeze profile grid")
    return GaussianModeState(
        grid=state.grid,
        qq=state.qq * np.exp(-2.0 * prof.f),
        pp=state.pp * np.exp(2.0 * prof.f),
        qp_sym=state.qp_sym,
        hbar=state.hbar,
    )


def uncertainty_products(state: GaussianModeState) -> np.ndarray:
    return state.qq * state.pp - state.qp_sym ** 2


def _entangler_base(state: GaussianModeState) -> float:
    # Var(1/2 {Q, Phi}) = qq*pp + qp^2 + hbar^2/4 for a zero-mean Gaussian.
    h2 = state.hbar * state.hbar
    per_mode = 2.0 * (state.qq * state.pp + state.qp_sym ** 2 + h2 / 4.0) / h2
    return float(np.mean(per_mode))


def entangler_variance(state: GaussianModeState, chi: float,
                       grid: Optional[ModeGrid] = None) -> float:
    """
    Variance density of K = (chi / 2 hbar) * integral dk (Q Phi + Phi Q).

    Evaluated with Wick's theorem and normalized per mode so the IR vacuum
    gives chi**2.
    """
    if grid is not None:
        _require_same_grid(state.grid, grid, "entangler grid")
    chi = float(chi)
    return chi * chi * _entangler_base(state)


def state_fidelity(a: GaussianModeState, b: GaussianModeState) -> np.ndarray:
    """Per-mode overlap |<a|b>|^2 of pure zero-mean single-mode Gaussians."""
    _require_same_grid(a.grid, b.grid, "fidelity grid")
    h2 = a.hbar * a.hbar
    det = ((a.qq + b.qq) * (a.pp + b.pp) - (a.qp_sym + b.qp_sym) ** 2) / h2
    return 1.0 / np.sqrt(det)


def _infidelity(state: GaussianModeState, delta: float) -> float:
    moved = apply_squeeze(state, SqueezeProfile.uniform(state.grid, delta))
    h2 = state.hbar * state.hbar
    det = ((state.qq + moved.qq) * (state.pp + moved.pp)
           - (state.qp_sym + moved.qp_sym) ** 2) / h2
    # 1 - det**-1/2 without cancellation
    return float(np.mean(-np.expm1(-0.5 * np.log(det))))


def entangler_variance_from_overlap(state: GaussianModeState, chi: float,
                                    step: float = 1e-3) -> float:
    """
    Entangler variance from the fidelity susceptibility of the flow.

    Moves the state along the entangler by chi*step and reads the variance
    from 2 * (1 - F) / step**2, Richardson-extrapolated over step and step/2.
    """
    if step <= 0:
        raise ConfigError(f"step must be > 0, got {step!r}")
    chi = float(chi)
    if chi == 0.0:
        return 0.0
    coarse = 2.0 * _infidelity(state, chi * step) / step ** 2
    half = step / 2.0
    fine = 2.0 * _infidelity(state, chi * half) / half ** 2
    return (4.0 * fine - coarse) / 3.0


ChiLike = Union[float, Callable[[float], float]]


def squeeze_profile(grid: ModeGrid, chi: ChiLike, u: float) -> SqueezeProfile:
    """
    Squeeze exponent accumulated by flowing from u=0 down to u.

    f(k, u) = -integral from max(u, log(k/cutoff)) to 0 of chi(u') du'.
    Modes below cutoff*exp(u) stop accumulating at u.
    """
    if u > 0:
        raise ConfigError(f"flow scale u must be <= 0, got {u!r}")
    if callable(chi):
        strength = chi
    else:
        value = float(chi)
        strength = lambda _u: value

    lower = np.maximum(float(u), grid.scales)
    f = np.empty(grid.count)
    for i, a in enumerate(lower):
        if a >= 0.0:
            f[i] = 0.0
        elif not callable(chi):
            f[i] = value * a
        else:
            f[i] = -integrate(strength, (a, 0.0), operation="squeeze_profile").value
    logger.debug("built squeeze profile at u=%s over %d modes", u, grid.count)
    return SqueezeProfile(grid, f, u=float(u), chi=strength)
