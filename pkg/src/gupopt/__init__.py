"""Pulsed optomechanical probe of deformed canonical commutators.

Closed-form analytics for the four-displacement protocol, an exact
truncated-Fock-space oracle, the noise budget and the shot-noise-limited
sensitivity analysis.
"""

__version__ = "0.1.0"

from .deformations import (
    CONSTANTS,
    Constants,
    DeformationModel,
    PhysicalParams,
    composite_chi,
    deformed_momentum,
    dimensionless_strength,
    nested_commutators,
)
from .errors import (
    ConfigError,
    CutoffInsufficientError,
    GupoptError,
    InvalidDimensionError,
    NumericError,
    OutOfRegimeError,
)
from .fock import (
    FockOperator,
    FockState,
    coherent_state,
    converged_by_doubling,
    displacement,
    expect,
    ladder,
    matrix_exp,
    number_operator,
    quadratures,
    thermal_state,
)
from .noise import (
    BathMCResult,
    NoiseBudget,
    PulseShape,
    bath_monte_carlo,
    build_noise_budget,
    decoherence_factor,
    eta_reduction,
    intracavity_zeta,
    thermal_attenuation,
    xi_eta_check,
)
from .protocol import (
    HarmonicVariant,
    ProtocolOutcome,
    XiBlocks,
    harmonic_phase_fit,
    mean_field_numeric,
    mean_field_qm,
    protocol_outcome,
    theta,
    theta_finite,
    theta_per_unit_strength,
    xi_exact,
    xi_harmonic_variant,
)
from .sensitivity import (
    SensitivityReport,
    apply_noise_budget,
    phase_imprecision,
    requirement_budget,
    resolvable_strength,
    table2_report,
    theta_closed_form,
    uncertainty_curve,
)
