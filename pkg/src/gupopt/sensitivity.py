"""Shot-noise-limited resolution of the deformation parameters.

The protocol measures the rotation of the optical mean; the fundamental
imprecision of that phase over N_r runs of N_p-photon pulses is
sigma_out / sqrt(N_p N_r).  Dividing by the rotation per unit bare strength
gives the smallest resolvable beta0 / gamma0 / mu0, which is what an
experiment would quote as a bound.
"""

from dataclasses import dataclass, replace

import numpy as np

from .deformations import CONSTANTS, DeformationModel, PhysicalParams
from .noise import NoiseBudget
from .protocol import theta_per_unit_strength


def phase_imprecision(n_photons, n_runs, sigma_out=0.5):
    """Fundamental phase imprecision sigma_out / sqrt(N_p N_r)."""
    if n_photons <= 0 or n_runs <= 0 or sigma_out <= 0:
        raise ValueError("photon number, run count and quadrature width must be positive")
    return sigma_out / np.sqrt(n_photons * n_runs)


def theta_closed_form(kind, params: PhysicalParams):
    """Rotation per unit bare strength written directly in lab parameters.

    Obtained by substituting lambda = 4 F x0 / lambda_L and the
    dimensionless-strength definitions into the asymptotic rotation
    formulas; must agree with the lambda-route evaluation identically.
    """
    hbar, c, m_p = CONSTANTS.hbar, CONSTANTS.c, CONSTANTS.M_P
    f, m, wl, om, n_p = params.finesse, params.mass, params.wavelength, params.omega_m, params.n_photons
    if kind == "mu":
        return 32.0 * hbar * f**2 * m * n_p / (m_p**2 * wl**2 * om)
    if kind == "gamma":
        return 96.0 * hbar**2 * f**3 * n_p**2 / (m_p * c * wl**3 * m * om)
    if kind == "beta":
        return 1024.0 * hbar**3 * f**4 * n_p**3 / (3.0 * m_p**2 * c**2 * wl**4 * m * om)
    raise ValueError(f"no closed form for kind {kind!r}")


@dataclass(frozen=True)
class RequirementCheck:
    name: str
    bound: float
    actual: float
    passed: bool


def requirement_budget(params: PhysicalParams):
    """Pass/fail checklist of the experimental validity requirements."""
    lam = params.lam
    checks = [
        ("thermal occupation nbar < 30", 30.0, params.n_thermal, params.n_thermal < 30.0),
        ("bath temperature T < 0.1 K", 0.1, params.temperature, params.temperature < 0.1),
        ("mechanical quality Q > 1e6", 1e6, params.quality, params.quality > 1e6),
        ("interaction strength lambda < 1", 1.0, lam, lam < 1.0),
        (
            "nbar << lambda N_p (factor 10)",
            lam * params.n_photons / 10.0,
            params.n_thermal,
            params.n_thermal * 10.0 <= lam * params.n_photons,
        ),
    ]
    return [RequirementCheck(*c) for c in checks]


@dataclass(frozen=True)
class SensitivityReport:
    """Resolvable bare deformation strength for one model and parameter set."""

    kind: str
    phase_imprecision: float
    theta_magnitude: float  # |Theta| per unit bare strength
    resolvable_strength: float
    requirement_checks: tuple

    @classmethod
    def build(cls, kind, imprecision, theta_magnitude, checks):
        return cls(kind, imprecision, theta_magnitude, imprecision / theta_magnitude, tuple(checks))


def resolvable_strength(model: DeformationModel, params: PhysicalParams):
    """Smallest bare strength distinguishable from zero at shot noise."""
    imprecision = phase_imprecision(params.n_photons, params.n_runs, params.sigma_out)
    per_unit = theta_per_unit_strength(model.kind, params)
    return SensitivityReport.build(model.kind, imprecision, per_unit, requirement_budget(params))


def apply_noise_budget(report: SensitivityReport, budget: NoiseBudget):
    """Rescale the signal by the composite noise reduction and re-derive the bound."""
    theta_magnitude = report.theta_magnitude * budget.composite
    return replace(
        report,
        theta_magnitude=theta_magnitude,
        resolvable_strength=report.phase_imprecision / theta_magnitude,
    )


@dataclass(frozen=True)
class UncertaintyCurve:
    """Modified uncertainty bound in Planck units.

    ``dp`` is Delta p / (M_P c), ``dx`` the minimal Delta x / l_P with
    l_P = hbar/(M_P c); for beta0 > 0 the curve has its minimum sqrt(beta0)
    at dp = 1/sqrt(beta0).
    """

    beta0: float
    dp: np.ndarray
    dx: np.ndarray
    minimum_dp: float
    minimum_dx: float


def uncertainty_curve(beta0, dp):
    """Minimum position uncertainty allowed by the deformed bound."""
    if beta0 < 0:
        raise ValueError("beta0 must be nonnegative")
    dp = np.asarray(dp, dtype=float)
    if np.any(dp <= 0):
        raise ValueError("momentum uncertainties must be positive")
    dx = (1.0 + beta0 * dp**2) / (2.0 * dp)
    if beta0 > 0:
        min_dp = 1.0 / np.sqrt(beta0)
        min_dx = float((1.0 + beta0 * min_dp**2) / (2.0 * min_dp))
    else:
        min_dp = np.inf
        min_dx = 0.0
    return UncertaintyCurve(float(beta0), dp, dx, float(min_dp), min_dx)


# Parameter sets quoted for Planck-level resolution of each model, with the
# imprecision each column is expected to reach.
TABLE2_COLUMNS = (
    {
        "kind": "mu",
        "params": dict(mass=1e-11, omega_m=2 * np.pi * 1e5, finesse=1e5, wavelength=1064e-9, n_photons=1e8, n_runs=1),
        "delta_phi_target": 1e-4,
    },
    {
        "kind": "gamma",
        "params": dict(mass=1e-9, omega_m=2 * np.pi * 1e5, finesse=2e5, wavelength=1064e-9, n_photons=5e10, n_runs=1e5),
        "delta_phi_target": 1e-8,
    },
    {
        "kind": "beta",
        "params": dict(mass=1e-7, omega_m=2 * np.pi * 1e5, finesse=4e5, wavelength=532e-9, n_photons=1e14, n_runs=1e6),
        "delta_phi_target": 1e-10,
    },
)


def table2_report():
    """End-to-end resolution for the three reference parameter columns."""
    rows = []
    for column in TABLE2_COLUMNS:
        params = PhysicalParams(**column["params"])
        report = resolvable_strength(DeformationModel(column["kind"], 1.0), params)
        target = column["delta_phi_target"]
        rows.append(
            {
                "kind": column["kind"],
                "params": params,
                "lam": params.lam,
                "theta_per_unit": report.theta_magnitude,
                "delta_phi": report.phase_imprecision,
                "delta_strength": report.resolvable_strength,
                "delta_phi_target": target,
                "delta_phi_within_2": 0.5 <= report.phase_imprecision / target <= 2.0,
                "delta_strength_within_5": 0.2 <= report.resolvable_strength <= 5.0,
            }
        )
    return rows
