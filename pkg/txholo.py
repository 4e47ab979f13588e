#!/usr/bin/env python3
"""
txholo command-line entry point.

Runs one analysis per invocation and writes a CSV or JSON report:

    line        line quantities and dispersion
    scatter     junction scattering matrix over frequency
    variance    endpoint charge variance (quadrature vs closed form)
    cmera       variational flow, entangler strength and g_uu
    geometry    curvature, lambda and stress tensor of the bulk metric
    propagator  radial propagator and boundary-to-bulk values
    entropy     radial geodesic log-length
"""
import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

import settings
from circuits import (EndpointLCSpec, PhysicalConstants, TransmissionLineSpec,
                      dispersion, lcr_roots, line_quantities, q_factor)
from cmera import FlowConfig, flow_table
from errors import ConfigError, NumericalError, TxHoloError
from holography import (BoundaryField, MetricFamily, boundary_to_bulk, bulk_propagator,
                        curvature_report, flux_residual, geodesic_log_length,
                        geodesic_log_length_quadrature, radial_flux)
from network_config import parse_network
from report_log import emit_flag, setup_logging
from reports import Report, plot_report, utc_stamp, write_report
from scattering import (JunctionSpec, QFactorRegime, charge_variance_closed,
                        charge_variance_quadrature, cmera_weighted_variance,
                        gamma_factor, large_q_ratio, network_s_matrix,
                        published_charge_variance, report_variance_discrepancies,
                        report_weighted_variance_form)

logger = logging.getLogger("txholo.cli")

COMMANDS = ("line", "scatter", "variance", "cmera", "geometry", "propagator", "entropy")


@dataclass(frozen=True)
class SweepRange:
    minimum: float
    maximum: float
    steps: int
    log: bool = False

    def __post_init__(self):
        if self.steps < 2:
            raise ConfigError(f"--steps must be >= 2, got {self.steps}")
        if not self.minimum < self.maximum:
            raise ConfigError(f"sweep needs min < max, got {self.minimum} >= {self.maximum}")
        if self.log and self.minimum <= 0:
            raise ConfigError("log sweeps need a positive minimum")

    def values(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.minimum, self.maximum, self.steps)
        return np.linspace(self.minimum, self.maximum, self.steps)


@dataclass
class RunConfig:
    """One CLI invocation: subcommand, input/output and option values."""

    command: str
    options: Dict[str, Any]
    input_path: Optional[Path] = None
    out: Optional[Path] = None
    fmt: str = "csv"
    sweep: Optional[SweepRange] = None
    plot: Optional[Path] = None
    stamp: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"--format must be csv or json, got {self.fmt!r}")
        if self.input_path is not None and not Path(self.input_path).exists():
            raise ConfigError(f"input file not found: {self.input_path}")

    def get(self, name: str, default: Any = None) -> Any:
        value = self.options.get(name)
        return default if value is None else value

    def require(self, name: str) -> Any:
        value = self.options.get(name)
        if value is None:
            raise ConfigError(f"{self.command}: --{name.replace('_', '-')} is required")
        return value


def parallel_map(fn: Callable, items: Sequence) -> List:
    """Order-preserving map over a thread pool capped by TXH_THREADS."""
    items = list(items)
    workers = max(1, min(settings.thread_limit(), len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="txholo-sweep") as pool:
        return list(pool.map(fn, items))


def _consts(cfg: RunConfig) -> PhysicalConstants:
    if cfg.get("natural_units", False):
        if cfg.options.get("hbar") not in (None, 1.0):
            raise ConfigError("--natural-units conflicts with an explicit --hbar")
        return PhysicalConstants.natural()
    return PhysicalConstants(cfg.get("hbar", 1.0))


def _line(cfg: RunConfig) -> TransmissionLineSpec:
    return TransmissionLineSpec(cfg.get("lt", 1.0), cfg.get("ct", 1.0))


def _endpoint(cfg: RunConfig) -> Optional[EndpointLCSpec]:
    l, c = cfg.options.get("l"), cfg.options.get("c")
    if l is None and c is None:
        return None
    if l is None or c is None:
        raise ConfigError("--l and --c must be given together")
    return EndpointLCSpec(l, c)


def _sweep_or_single(cfg: RunConfig, single: str) -> np.ndarray:
    value = cfg.options.get(single)
    if value is not None:
        if cfg.sweep is not None:
            raise ConfigError(f"--{single} conflicts with a sweep range")
        return np.array([float(value)])
    if cfg.sweep is None:
        raise ConfigError(f"{cfg.command}: give --{single} or a sweep range")
    return cfg.sweep.values()


def cmd_line(cfg: RunConfig, consts: PhysicalConstants) -> Report:
    line = _line(cfg)
    quantities = line_quantities(line)
    sweep = cfg.sweep or SweepRange(0.0, cfg.get("k_max", 1.0), cfg.get("steps", 11))
    rows = [{"k": float(k), "omega_k": dispersion(line, float(k))} for k in sweep.values()]
    params = {
        "L_T": line.inductance_per_length, "C_T": line.capacitance_per_length,
        "Z_T": quantities.impedance, "v": quantities.velocity, "R": quantities.resistance,
        "hbar": consts.hbar,
    }
    endpoint = _endpoint(cfg)
    if endpoint is not None:
        roots = lcr_roots(endpoint, quantities.resistance)
        params.update({"L": endpoint.inductance, "C": endpoint.capacitance,
                       "omega0": endpoint.omega0, "q": q_factor(endpoint, line),
                       "decay_rate": float(-np.max(roots.real)),
                       "ring_frequency": float(np.max(np.abs(roots.imag)))})
    return Report("line", params, rows, columns=["k", "omega_k"])


def cmd_scatter(cfg: RunConfig, consts: PhysicalConstants) -> Report:
    if cfg.input_path is not None:
        junction = parse_network(cfg.input_path, hbar=consts.hbar)
        params: Dict[str, Any] = {"network": str(cfg.input_path)}
    else:
        endpoint = _endpoint(cfg)
        if endpoint is None:
            raise ConfigError("scatter: give --network or an endpoint via --l/--c")
        junction = JunctionSpec.single_endpoint(endpoint, _line(cfg), hbar=consts.hbar)
        params = {"L": endpoint.inductance, "C": endpoint.capacitance,
                  "L_T": junction.lines[0].inductance_per_length,
                  "C_T": junction.lines[0].capacitance_per_length}
    params.update({"lines": junction.size, "hbar": consts.hbar,
                   "R": [float(r) for r in junction.resistances]})
    omegas = _sweep_or_single(cfg, "omega")
    samples = parallel_map(lambda w: network_s_matrix(float(w), junction), omegas)

    rows = []
    for sample in samples:
        unitarity = sample.unitarity_error()
        for i in range(junction.size):
            for j in range(junction.size):
                s = complex(sample.s_matrix[i, j])
                raw = complex(sample.raw_s_matrix[i, j])
                rows.append({
                    "omega": sample.omega, "i": i + 1, "j": j + 1,
                    "re_s": s.real, "im_s": s.imag, "abs_s": abs(s),
                    "re_s_raw": raw.real, "im_s_raw": raw.imag,
                    "unitarity_error": unitarity,
                })
    emit_flag(
        logger, "s_matrix_sign",
        "reported S uses the published sign; the direct junction solve gives -S "
        "(columns re_s_raw, im_s_raw)",
    )
    return Report("scatter", params, rows)


def cmd_variance(cfg: RunConfig, consts: PhysicalConstants) -> Report:
    resistance = float(cfg.get("R", 1.0))
    hbar = consts.hbar
    qs = _sweep_or_single(cfg, "q")
    lam = cfg.options.get("lambda_cutoff")
    ratio = float(cfg.get("lt_over_l", 1.0))
    fixed_gamma = cfg.options.get("gamma")

    def row(q: float) -> Dict[str, Any]:
        regime = QFactorRegime.classify(float(q))
        quad = charge_variance_quadrature(regime, resistance, hbar)
        closed = charge_variance_closed(regime, resistance, hbar)
        entry = {
            "q": regime.q, "regime": regime.regime.value,
            "variance_quadrature": quad, "variance_closed": closed,
            "relative_delta": abs(closed - quad) / quad,
            "published_value": published_charge_variance(regime, resistance, hbar),
            "large_q_ratio": large_q_ratio(regime, resistance, hbar),
        }
        if lam is not None:
            gamma = float(fixed_gamma) if fixed_gamma is not None else gamma_factor(regime.q, lam, ratio)
            entry["gamma"] = gamma
            entry["weighted_variance"] = cmera_weighted_variance(
                regime, gamma, lam, ratio, resistance, hbar)
            entry["gamma_times_closed"] = gamma * closed
        return entry

    rows = parallel_map(row, qs)
    for q in qs:
        report_variance_discrepancies(float(q), resistance, hbar)
    if lam is not None:
        report_weighted_variance_form()
    params = {"R": resistance, "hbar": hbar}
    if lam is not None:
        params.update({"lambda_cutoff": float(lam), "lt_over_l": ratio})
        if fixed_gamma is not None:
            params["gamma"] = float(fixed_gamma)
    return Report("variance", params, rows)


def cmd_cmera(cfg: RunConfig, consts: PhysicalConstants) -> Report:
    line = _line(cfg)
    endpoint = _endpoint(cfg)
    flow = FlowConfig.build(
        line, cfg.get("lambda_cutoff", 1.0), endpoint=endpoint,
        u_min=cfg.options.get("u_min"), modes=cfg.options.get("modes"), consts=consts,
    )
    rows = flow_table(flow)
    params = {
        "L_T": line.inductance_per_length, "C_T": line.capacitance_per_length,
        "lambda_cutoff": flow.lambda_cutoff, "u_min": flow.u_min,
        "modes": flow.grid.count, "hbar": consts.hbar,
        "functional": "free" if endpoint is None else "endpoint",
    }
    if endpoint is not None:
        params.update({"L": endpoint.inductance, "C": endpoint.capacitance,
                       "coupling_ratio": flow.coupling_ratio})
    return Report("cmera", params, rows)


def _z_grid(cfg: RunConfig) -> np.ndarray:
    sweep = SweepRange(cfg.get("z_min", 0.1), cfg.get("z_max", 10.0),
                       cfg.get("steps", 64), log=bool(cfg.get("log", False)))
    if sweep.minimum <= 0:
        raise ConfigError("--z-min must be > 0")
    return sweep.values()


def _family(cfg: RunConfig) -> MetricFamily:
    return MetricFamily(cfg.get("beta", 0.0), cfg.get("epsilon", 1.0))


def cmd_geometry(cfg: RunConfig, consts: PhysicalConstants) -> Report:
    fam = _family(cfg)
    report = curvature_report(fam, _z_grid(cfg))
    rows = []
    for i, z in enumerate(report.z):
        rows.append({
            "z": float(z),
            "g_zz": report.metric[i, 0], "g_xx": report.metric[i, 1], "g_tt": report.metric[i, 2],
            "R_zz": report.ricci[i, 0], "R_xx": report.ricci[i, 1], "R_tt": report.ricci[i, 2],
            "R": report.scalar[i],
            "G_zz": report.einstein[i, 0], "G_xx": report.einstein[i, 1], "G_tt": report.einstein[i, 2],
            "lambda": report.lam[i],
            "T_zz": report.stress[i, 0], "T_xx": report.stress[i, 1], "T_tt": report.stress[i, 2],
            "div_T_z": report.continuity[i, 0],
        })
    return Report("geometry", {"beta": fam.beta, "epsilon": fam.epsilon, "kappa": 1.0}, rows)


def cmd_propagator(cfg: RunConfig, consts: PhysicalConstants) -> Report:
    fam = _family(cfg)
    beta_hat = fam.to_propagator_form()
    norm = float(cfg.get("norm", 1.0))
    zs = _z_grid(cfg)
    boundary = BoundaryField.from_csv(cfg.input_path) if cfg.input_path is not None else None
    x0, t0 = float(cfg.get("x", 0.0)), float(cfg.get("t", 0.0))

    rows = []
    for z in zs:
        z = float(z)
        entry = {
            "z": z,
            "K": float(bulk_propagator(z, beta_hat, norm)),
            "flux": float(radial_flux(z, beta_hat, norm)),
            "flux_residual": float(flux_residual(z, beta_hat, norm)),
        }
        if boundary is not None:
            value = boundary_to_bulk(boundary, (z, x0, t0), fam, norm)
            entry["phi"] = value.value
            entry["lost_mass_fraction"] = value.lost_mass_fraction
        rows.append(entry)
    params = {"beta": fam.beta, "epsilon": fam.epsilon, "beta_hat": beta_hat, "c": norm}
    if boundary is not None:
        params.update({"boundary": str(cfg.input_path), "x": x0, "t": t0})
        emit_flag(
            logger, "kernel_signature",
            "boundary kernel uses the Euclidean distance on (x, t) as written in the "
            "boundary integral, not the z^2 + x^2 - t^2 form of the inversion map",
        )
    return Report("propagator", params, rows)


def cmd_entropy(cfg: RunConfig, consts: PhysicalConstants) -> Report:
    a = float(cfg.require("a"))
    xi = float(cfg.require("xi"))
    steps = cfg.options.get("steps")
    xis = [xi] if steps is None else list(SweepRange(a, xi, int(steps), log=True).values()[1:])
    rows = [{
        "a": a, "xi": float(x),
        "length": geodesic_log_length(a, float(x)),
        "length_quadrature": geodesic_log_length_quadrature(a, float(x)),
    } for x in xis]
    return Report("entropy", {"a": a, "xi": xi}, rows)


HANDLERS: Dict[str, Callable[[RunConfig, PhysicalConstants], Report]] = {
    "line": cmd_line,
    "scatter": cmd_scatter,
    "variance": cmd_variance,
    "cmera": cmd_cmera,
    "geometry": cmd_geometry,
    "propagator": cmd_propagator,
    "entropy": cmd_entropy,
}

PLOTS = {
    "line": ("k", ["omega_k"], False),
    "scatter": ("omega", ["re_s", "im_s"], True),
    "variance": ("q", ["variance_quadrature", "variance_closed", "published_value"], True),
    "cmera": ("s", ["chi_numeric", "chi_stationary", "chi_published", "g_uu"], False),
    "geometry": ("z", ["R", "lambda", "div_T_z"], True),
    "propagator": ("z", ["flux", "phi"], True),
    "entropy": ("xi", ["length", "length_quadrature"], True),
}


def run(config: RunConfig) -> Report:
    """
    Execute one command and write its report.

    Flags raised while the command runs are collected from the log and
    stored in the report.
    """
    flag_handler = setup_logging(config.options.get("log_config"))
    flag_handler.drain()
    consts = _consts(config)
    report = HANDLERS[config.command](config, consts)
    report.flags = flag_handler.drain()
    if config.stamp:
        report.stamp = utc_stamp()
    text = write_report(report, config.out, config.fmt)
    if config.out is None:
        sys.stdout.write(text)
    if config.plot is not None:
        x, ys, logx = PLOTS[config.command]
        plot_report(report, config.plot, x, ys, logx=logx)
    return report


def _hbar_arg(value: str) -> float:
    if value.strip().lower() == "si":
        return settings.HBAR_SI
    try:
        hbar = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'si', got {value!r}") from None
    if not (math.isfinite(hbar) and hbar > 0):
        raise argparse.ArgumentTypeError(f"hbar must be > 0, got {value!r}")
    return hbar


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', type=Path, help='Report path (stdout when omitted)')
    common.add_argument('--format', choices=['csv', 'json'], default='csv', help='Report format')
    common.add_argument('--hbar', type=_hbar_arg, help="Reduced Planck constant, or 'si'")
    common.add_argument('--natural-units', action='store_true', help='Use hbar = 1')
    common.add_argument('--plot', type=Path, help='Also write a PNG figure')
    common.add_argument('--stamp', action='store_true', help='Add a timestamp to the header')
    common.add_argument('--log-config', type=Path, help='JSON logging config (default TXH_LOG_CONFIG)')

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument('--steps', type=int, help='Number of sweep samples')
    sweep.add_argument('--log', action='store_true', help='Log-spaced sweep')

    line = argparse.ArgumentParser(add_help=False)
    line.add_argument('--lt', type=float, help='Line inductance per length L_T')
    line.add_argument('--ct', type=float, help='Line capacitance per length C_T')
    line.add_argument('--l', type=float, help='Endpoint inductance L')
    line.add_argument('--c', type=float, help='Endpoint capacitance C')

    geometry = argparse.ArgumentParser(add_help=False)
    geometry.add_argument('--beta', type=float, help='Endpoint coupling L_T/(L Lambda)')
    geometry.add_argument('--epsilon', type=float, help='UV length scale')
    geometry.add_argument('--z-min', type=float, help='Smallest z')
    geometry.add_argument('--z-max', type=float, help='Largest z')

    parser = argparse.ArgumentParser(
        prog='txholo',
        description='Transmission-line quantization, scattering and holographic flow reports',
    )
    parser.add_argument('--version', action='version', version=f'txholo {settings.VERSION}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('line', parents=[common, sweep, line], help='Line quantities and dispersion')
    p.add_argument('--k-max', type=float, help='Largest wavenumber of the dispersion table')

    p = sub.add_parser('scatter', parents=[common, sweep, line], help='Junction S-matrix')
    p.add_argument('--network', type=Path, help='Network config file')
    p.add_argument('--omega', type=float, help='Single angular frequency')
    p.add_argument('--omega-min', type=float)
    p.add_argument('--omega-max', type=float)

    p = sub.add_parser('variance', parents=[common, sweep], help='Endpoint charge variance')
    p.add_argument('--q', type=float, help='Q-factor')
    p.add_argument('--q-min', type=float)
    p.add_argument('--q-max', type=float)
    p.add_argument('--R', type=float, help='Line resistance')
    p.add_argument('--gamma', type=float, help='Fixed gamma for the weighted variance')
    p.add_argument('--lambda-cutoff', type=float, help='Cutoff for the weighted variance')
    p.add_argument('--lt-over-l', type=float, help='Ratio L_T / L')

    p = sub.add_parser('cmera', parents=[common, line], help='Variational flow')
    p.add_argument('--lambda-cutoff', type=float, help='Cutoff Lambda')
    p.add_argument('--modes', type=int, help='Mode count (default TXH_GRID_MODES)')
    p.add_argument('--u-min', type=float, help='IR truncation (default TXH_U_MIN)')

    sub.add_parser('geometry', parents=[common, sweep, geometry], help='Bulk curvature')

    p = sub.add_parser('propagator', parents=[common, sweep, geometry], help='Bulk propagator')
    p.add_argument('--boundary', type=Path, help='Boundary field CSV (x, t, phi0)')
    p.add_argument('--x', type=float, help='Boundary x of the bulk point')
    p.add_argument('--t', type=float, help='Boundary t of the bulk point')
    p.add_argument('--norm', type=float, help='Propagator normalization c')

    p = sub.add_parser('entropy', parents=[common], help='Geodesic log-length')
    p.add_argument('--a', type=float, help='UV cutoff length')
    p.add_argument('--xi', type=float, help='IR scale')
    p.add_argument('--steps', type=int, help='Sweep xi over this many log-spaced points')
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    options = {k: v for k, v in vars(args).items()
               if k not in ("command", "out", "format", "plot", "stamp", "network", "boundary")}
    sweep = None
    for prefix in ("omega", "q"):
        lo, hi = options.pop(f"{prefix}_min", None), options.pop(f"{prefix}_max", None)
        if lo is not None or hi is not None:
            if lo is None or hi is None:
                raise ConfigError(f"--{prefix}-min and --{prefix}-max must be given together")
            steps = options.get("steps")
            sweep = SweepRange(lo, hi, 2 if steps is None else steps, bool(options.get("log")))
    if args.command == "cmera" and options.get("modes") is not None and options["modes"] < 2:
        raise ConfigError("--modes must be >= 2")
    input_path = getattr(args, "network", None) or getattr(args, "boundary", None)
    return RunConfig(
        command=args.command, options=options, input_path=input_path,
        out=args.out, fmt=args.format, sweep=sweep, plot=args.plot, stamp=args.stamp,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        run(config_from_args(args))
    except ConfigError as exc:
        print(f"txholo {args.command}: configuration error: {exc}", file=sys.stderr)
        return exc.exit_status
    except NumericalError as exc:
        print(f"txholo {args.command}: numerical failure: {exc}", file=sys.stderr)
        return exc.exit_status
    except TxHoloError as exc:
        print(f"txholo {args.command}: {exc}", file=sys.stderr)
        return exc.exit_status
    return 0


if __name__ == '__main__':
    sys.exit(main())
