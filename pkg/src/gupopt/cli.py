"""Command-line front end.

Subcommands: theta, oracle, table2, sweep, figure1, noise-budget.  Runs are
configured by an INI file with sections [deformation], [physical], [noise],
[oracle], [output] and, for sweeps, [sweep]; unknown sections or keys are
rejected.  Data goes to --output or stdout as CSV (>= 10 significant digits,
unit-annotated headers) or JSON; diagnostics go to stderr.

Exit codes: 0 success, 2 configuration error, 3 regime violation,
4 cutoff insufficiency, 5 I/O error.
"""

import argparse
import configparser
import io
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .deformations import DeformationModel, PhysicalParams
from .errors import ConfigError, CutoffInsufficientError, GupoptError, OutOfRegimeError
from .noise import (
    NoiseBudget,
    PulseShape,
    bath_monte_carlo,
    build_noise_budget,
    decoherence_factor,
    eta_reduction,
    intracavity_zeta,
    thermal_attenuation,
)
from .protocol import mean_field_numeric, mean_field_qm, protocol_outcome, theta, theta_finite
from .sensitivity import (
    apply_noise_budget,
    phase_imprecision,
    requirement_budget,
    resolvable_strength,
    table2_report,
    uncertainty_curve,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_CUTOFF = 4
EXIT_IO = 5

_PHYSICAL_KEYS = {
    "m": "mass",
    "omega_m": "omega_m",
    "F": "finesse",
    "lambda_L": "wavelength",
    "N_p": "n_photons",
    "N_r": "n_runs",
    "nbar": "n_thermal",
    "eta": "eta",
    "T": "temperature",
    "Q": "quality",
    "sigma_out": "sigma_out",
}
_DEFORMATION_KEYS = ("model", "strength")
_NOISE_KEYS = ("pulse", "kappa_tau", "mc_samples")
_ORACLE_KEYS = ("alpha", "nbar", "opt_dim", "mech_dim", "lam", "tolerance")
_OUTPUT_KEYS = ("format", "path")
_SWEEP_KEYS = ("parameter", "values")
_SWEEP_PARAMETERS = ("m", "F", "N_p", "N_r", "lambda_L", "omega_m")


@dataclass(frozen=True)
class OracleConfig:
    alpha: float
    nbar: float = 0.0
    opt_dim: int = None
    mech_dim: int = None
    lam: float = 0.1
    tolerance: float = None


@dataclass(frozen=True)
class NoiseConfig:
    pulse: str = None
    kappa_tau: float = None
    mc_samples: int = None


@dataclass(frozen=True)
class SweepConfig:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class OutputConfig:
    format: str = "csv"
    path: str = None


@dataclass(frozen=True)
class RunConfig:
    deformation: DeformationModel
    physical: PhysicalParams
    noise: NoiseConfig = None
    oracle: OracleConfig = None
    output: OutputConfig = OutputConfig()
    sweep: SweepConfig = None


def _section(parser, name, allowed):
    if name not in parser:
        return None
    extra = set(parser[name]) - set(k.lower() for k in allowed)
    if extra:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
    return parser[name]


def parse_config(text):
    """Parse and validate an INI run configuration."""
    parser = configparser.ConfigParser()
    # configparser lowercases keys by default; keep exact case for validation
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from exc
    known = {"deformation", "physical", "noise", "oracle", "output", "sweep"}
    extra_sections = set(parser.sections()) - known
    if extra_sections:
        raise ConfigError(f"unknown config sections: {sorted(extra_sections)}")

    if "physical" not in parser:
        raise ConfigError("missing [physical] section")
    phys = parser["physical"]
    extra = set(phys) - set(_PHYSICAL_KEYS)
    if extra:
        raise ConfigError(f"unknown keys in [physical]: {sorted(extra)}")
    try:
        kwargs = {field: float(phys[key]) for key, field in _PHYSICAL_KEYS.items() if key in phys}
        physical = PhysicalParams(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [physical] values: {exc}") from exc

    model = DeformationModel.none()
    if "deformation" in parser:
        sec = parser["deformation"]
        extra = set(sec) - set(_DEFORMATION_KEYS)
        if extra:
            raise ConfigError(f"unknown keys in [deformation]: {sorted(extra)}")
        kind = sec.get("model", "none")
        strength = float(sec.get("strength", "0"))
        try:
            model = DeformationModel(kind, strength)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    noise_cfg = None
    sec = _section(parser, "noise", _NOISE_KEYS)
    if sec is not None:
        try:
            noise_cfg = NoiseConfig(
                pulse=sec.get("pulse", None),
                kappa_tau=float(sec["kappa_tau"]) if "kappa_tau" in sec else None,
                mc_samples=int(sec["mc_samples"]) if "mc_samples" in sec else None,
            )
        except ValueError as exc:
            raise ConfigError(f"invalid [noise] values: {exc}") from exc
        if noise_cfg.pulse is not None and noise_cfg.pulse not in ("square", "gaussian", "exponential"):
            raise ConfigError(f"unknown pulse kind {noise_cfg.pulse!r}")

    oracle_cfg = None
    sec = _section(parser, "oracle", _ORACLE_KEYS)
    if sec is not None:
        try:
            oracle_cfg = OracleConfig(
                alpha=float(sec["alpha"]),
                nbar=float(sec.get("nbar", "0")),
                opt_dim=int(sec["opt_dim"]) if "opt_dim" in sec else None,
                mech_dim=int(sec["mech_dim"]) if "mech_dim" in sec else None,
                lam=float(sec.get("lam", "0.1")),
                tolerance=float(sec["tolerance"]) if "tolerance" in sec else None,
            )
        except KeyError as exc:
            raise ConfigError(f"missing [oracle] key: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"invalid [oracle] values: {exc}") from exc

    output_cfg = OutputConfig()
    sec = _section(parser, "output", _OUTPUT_KEYS)
    if sec is not None:
        fmt = sec.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError(f"output format must be csv or json, got {fmt!r}")
        output_cfg = OutputConfig(format=fmt, path=sec.get("path", None))

    sweep_cfg = None
    sec = _section(parser, "sweep", _SWEEP_KEYS)
    if sec is not None:
        parameter = sec.get("parameter", None)
        if parameter not in _SWEEP_PARAMETERS:
            raise ConfigError(f"sweep parameter must be one of {_SWEEP_PARAMETERS}, got {parameter!r}")
        raw = sec.get("values", "").strip()
        try:
            values = tuple(float(v) for v in raw.split(",") if v.strip() != "")
        except ValueError as exc:
            raise ConfigError(f"invalid sweep values: {exc}") from exc
        sweep_cfg = SweepConfig(parameter, values)

    return RunConfig(model, physical, noise_cfg, oracle_cfg, output_cfg, sweep_cfg)


def config_to_string(config: RunConfig):
    """Serialize a RunConfig back to canonical INI text (round-trips)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser["deformation"] = {"model": config.deformation.kind, "strength": repr(config.deformation.strength)}
    parser["physical"] = {
        key: repr(getattr(config.physical, field)) for key, field in _PHYSICAL_KEYS.items()
    }
    if config.noise is not None:
        sec = {}
        if config.noise.pulse is not None:
            sec["pulse"] = config.noise.pulse
        if config.noise.kappa_tau is not None:
            sec["kappa_tau"] = repr(config.noise.kappa_tau)
        if config.noise.mc_samples is not None:
            sec["mc_samples"] = repr(config.noise.mc_samples)
        parser["noise"] = sec
    if config.oracle is not None:
        sec = {"alpha": repr(config.oracle.alpha), "nbar": repr(config.oracle.nbar), "lam": repr(config.oracle.lam)}
        if config.oracle.opt_dim is not None:
            sec["opt_dim"] = repr(config.oracle.opt_dim)
        if config.oracle.mech_dim is not None:
            sec["mech_dim"] = repr(config.oracle.mech_dim)
        if config.oracle.tolerance is not None:
            sec["tolerance"] = repr(config.oracle.tolerance)
        parser["oracle"] = sec
    out = {"format": config.output.format}
    if config.output.path is not None:
        out["path"] = config.output.path
    parser["output"] = out
    if config.sweep is not None:
        parser["sweep"] = {
            "parameter": config.sweep.parameter,
            "values": ",".join(repr(v) for v in config.sweep.values),
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def _format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{value:.10e}"
    if isinstance(value, complex):
        return f"{value.real:.10e}{value.imag:+.10e}j"
    return str(value)


def emit(rows, header, output: OutputConfig, override_path=None, override_format=None):
    """Write rows as CSV or JSON to the configured destination."""
    fmt = override_format or output.format
    path = override_path or output.path
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        text = json.dumps(
            [{k: (v if not isinstance(v, complex) else [v.real, v.imag]) for k, v in r.items()} for r in payload],
            indent=2,
            default=_format_value,
        ) + "\n"
    else:
        lines = [",".join(header)]
        lines += [",".join(_format_value(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


_PHYS_HEADER = ("m_kg", "omega_m_rad_s", "F", "lambda_L_m", "N_p", "N_r")


def _phys_row(params):
    return (params.mass, params.omega_m, params.finesse, params.wavelength, params.n_photons, params.n_runs)


def cmd_theta(config: RunConfig, args):
    outcome = protocol_outcome(config.deformation, config.physical)
    header = ("model", "strength") + _PHYS_HEADER + (
        "lambda",
        "theta_re",
        "theta_im",
        "theta_abs",
        "mean_field_re",
        "mean_field_im",
        "phi_rad",
    )
    rows = [
        (config.deformation.kind, config.deformation.strength)
        + _phys_row(config.physical)
        + (
            config.physical.lam,
            outcome.theta.real,
            outcome.theta.imag,
            abs(outcome.theta),
            outcome.mean_field.real,
            outcome.mean_field.imag,
            outcome.phi,
        )
    ]
    emit(rows, header, config.output, args.output, args.format)
    return EXIT_OK


def _oracle_reference(model, strength, alpha, lam, nbar):
    """Analytic value the oracle is compared against."""
    qm = mean_field_qm(alpha, lam)
    if model.kind == "none" or strength == 0.0:
        return qm
    return qm * np.exp(-1j * theta_finite(model, strength, alpha, lam, nbar))


def cmd_oracle(config: RunConfig, args):
    if config.oracle is None:
        raise ConfigError("the oracle subcommand needs an [oracle] section")
    oc = config.oracle
    model = config.deformation
    strength = model.strength  # dimensionless at desk scale
    numeric = mean_field_numeric(oc.alpha, oc.nbar, oc.lam, model, strength, oc.opt_dim, oc.mech_dim)
    reference = _oracle_reference(model, strength, oc.alpha, oc.lam, oc.nbar)
    rel_error = abs(numeric - reference) / abs(reference)
    tolerance = oc.tolerance if oc.tolerance is not None else (1e-6 if model.kind == "none" else 2e-2)

    rows = [("mean_field", numeric.real, numeric.imag, reference.real, reference.imag, rel_error, rel_error < tolerance)]
    header = ("quantity", "numeric_re", "numeric_im", "analytic_re", "analytic_im", "rel_error", "pass")
    if model.kind != "none" and strength > 0:
        base = mean_field_numeric(oc.alpha, oc.nbar, oc.lam, None, 0.0, oc.opt_dim, oc.mech_dim)
        th1 = 1j * np.log(numeric / base)
        doubled = mean_field_numeric(oc.alpha, oc.nbar, oc.lam, model, 2 * strength, oc.opt_dim, oc.mech_dim)
        th2 = 1j * np.log(doubled / base)
        exponent = float(np.log2(abs(th2) / abs(th1)))
        rows.append(("linearity_exponent", exponent, 0.0, 1.0, 0.0, abs(exponent - 1.0), abs(exponent - 1.0) < 0.02))
    emit(rows, header, config.output, args.output, args.format)
    return EXIT_OK


def cmd_table2(config, args):
    header = ("model", "F", "m_kg", "omega_m_over_2pi_Hz", "lambda_L_m", "N_p", "N_r", "lambda", "delta_phi", "delta_strength", "delta_phi_within_2", "delta_strength_within_5")
    rows = []
    for r in table2_report():
        p = r["params"]
        rows.append(
            (
                r["kind"],
                p.finesse,
                p.mass,
                p.omega_m / (2 * np.pi),
                p.wavelength,
                p.n_photons,
                p.n_runs,
                r["lam"],
                r["delta_phi"],
                r["delta_strength"],
                r["delta_phi_within_2"],
                r["delta_strength_within_5"],
            )
        )
    output = config.output if config else OutputConfig()
    emit(rows, header, output, args.output, args.format)
    return EXIT_OK


def cmd_sweep(config: RunConfig, args):
    if config.sweep is None:
        raise ConfigError("the sweep subcommand needs a [sweep] section")
    field = _PHYSICAL_KEYS[config.sweep.parameter]
    header = (config.sweep.parameter, "lambda", "theta_abs", "delta_phi", "delta_strength")
    rows = []
    for value in config.sweep.values:
        kwargs = {f: getattr(config.physical, f) for f in _PHYSICAL_KEYS.values()}
        kwargs[field] = value
        params = PhysicalParams(**kwargs)
        report = resolvable_strength(config.deformation, params)
        th = theta(config.deformation, params) if config.deformation.kind != "none" else 0.0
        rows.append((value, params.lam, abs(th), report.phase_imprecision, report.resolvable_strength))
    emit(rows, header, config.output, args.output, args.format)
    return EXIT_OK


def cmd_figure1(config, args):
    beta0_list = [float(v) for v in args.beta0.split(",")] if args.beta0 else [1.0]
    grid = np.geomspace(args.dp_min, args.dp_max, args.points)
    header = ("beta0", "dp_over_MPc", "dx_over_LP")
    rows = []
    for beta0 in beta0_list:
        curve = uncertainty_curve(beta0, grid)
        rows.extend((beta0, dp, dx) for dp, dx in zip(curve.dp, curve.dx))
    output = config.output if config else OutputConfig()
    emit(rows, header, output, args.output, args.format)
    return EXIT_OK


def cmd_noise_budget(config: RunConfig, args):
    params = config.physical
    model = config.deformation
    header = ("item", "value", "bound", "passed")
    rows = []
    if config.noise is not None and config.noise.kappa_tau is not None:
        kind = config.noise.pulse or "square"
        pulse = PulseShape.analytic(kind, 1.0)
        zeta = intracavity_zeta(pulse, config.noise.kappa_tau)  # duration 1 => kappa = kappa*tau
        rows.append((f"zeta({kind}, kappa*tau={config.noise.kappa_tau:g})", zeta, 1.0, zeta <= 1.0))
        budget_zeta = zeta
    else:
        budget_zeta = 1.0
    budget = NoiseBudget(
        zeta=budget_zeta,
        eta=params.eta,
        theta_reduction=eta_reduction(model, params.eta),
        thermal_factor=thermal_attenuation(params.n_thermal, params.lam, params.eta),
        decoherence=decoherence_factor(params.lam, params.temperature, params.omega_m, params.quality),
    )
    rows.append((f"eta_reduction({model.kind})", budget.theta_reduction, 1.0, True))
    rows.append(("thermal_attenuation", budget.thermal_factor, 1.0, True))
    rows.append(("decoherence_factor", budget.decoherence, 1.0, True))
    rows.append(("composite_reduction", budget.composite, 1.0, True))
    if config.noise is not None and config.noise.mc_samples:
        mc = bath_monte_carlo(
            params.lam, params.temperature, params.omega_m, params.quality, config.noise.mc_samples, args.seed
        )
        rows.append(("bath_mc_estimate", mc.estimate.real, mc.closed_form, abs(mc.estimate.real - mc.closed_form) < 3 * mc.std_error))
    for check in requirement_budget(params):
        rows.append((check.name, check.actual, check.bound, check.passed))
    if model.kind != "none":
        report = apply_noise_budget(resolvable_strength(model, params), budget)
        rows.append(("resolvable_strength_with_budget", report.resolvable_strength, 0.0, True))
    emit(rows, header, config.output, args.output, args.format)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gupopt",
        description="Pulsed optomechanical probe of deformed commutators: analytics, oracle and sensitivity.",
    )
    parser.add_argument("--version", action="version", version=f"gupopt {__version__}")
    parser.add_argument("--config", help="INI run configuration")
    parser.add_argument("--output", help="write data here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"), help="override output format")
    parser.add_argument("--seed", type=int, default=12345, help="random seed for Monte Carlo")
    parser.add_argument("--jobs", type=int, default=1, help="worker count (results are identical for any value)")
    parser.add_argument(
        "--unsafe-constants",
        metavar="NAME=VALUE[,...]",
        help="testing-only override of physical constants, e.g. 'hbar=1,c=1'",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("theta", "oracle", "sweep", "noise-budget"):
        sub.add_parser(name)
    sub.add_parser("table2")
    fig = sub.add_parser("figure1")
    fig.add_argument("--beta0", default="1.0", help="comma-separated modification strengths")
    fig.add_argument("--dp-min", type=float, default=1e-2)
    fig.add_argument("--dp-max", type=float, default=1e2)
    fig.add_argument("--points", type=int, default=201)
    return parser


_NEEDS_CONFIG = {"theta", "oracle", "sweep", "noise-budget"}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.unsafe_constants:
            from .deformations import unsafe_override_constants

            try:
                pairs = dict(item.split("=", 1) for item in args.unsafe_constants.split(","))
                unsafe_override_constants(**pairs)
            except ValueError as exc:
                raise ConfigError(f"bad --unsafe-constants: {exc}") from exc
            print("warning: physical constants overridden; results are not physical", file=sys.stderr)
        config = None
        if args.config is not None:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return EXIT_IO
            config = parse_config(text)
        elif args.command in _NEEDS_CONFIG:
            raise ConfigError(f"the {args.command} subcommand requires --config")
        handler = {
            "theta": cmd_theta,
            "oracle": cmd_oracle,
            "table2": cmd_table2,
            "sweep": cmd_sweep,
            "figure1": cmd_figure1,
            "noise-budget": cmd_noise_budget,
        }[args.command]
        return handler(config, args)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutOfRegimeError as exc:
        name = exc.inequality or "regime"
        print(f"error: out of regime ({name}): {exc}", file=sys.stderr)
        return EXIT_REGIME
    except CutoffInsufficientError as exc:
        print(f"error: cutoff insufficient: {exc}", file=sys.stderr)
        return EXIT_CUTOFF
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except GupoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
