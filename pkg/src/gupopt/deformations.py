"""Commutator deformation models and experimental parameters.

Three one-parameter deformations of [x, p] are supported, each reduced to a
dimensionless strength for a mechanical oscillator mode and represented, to
first order, by a modified momentum operator on the canonical space:

* ``beta``:  [x,p] = i hbar (1 + beta0 (p / M_P c)^2)       ->  P' = P (1 + beta P^2 / 3)
* ``gamma``: [x,p] = i hbar (1 - gamma0 p / M_P c + ...)    ->  P' = P - gamma P^2 / 2
* ``mu``:    [x,p] = i hbar (1 + mu0 m^2 / M_P^2) (heavy-mass limit)  ->  P' = P (1 + mu)

The gamma representation keeps only the linear term of the deformed
commutator; the quadratic gamma0^2 term is beyond first order.  The mu
rescaling is exact, not perturbative.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfRegimeError
from .fock import FockOperator

KINDS = ("none", "beta", "gamma", "mu")

STRENGTH_HARD_LIMIT = 1.0
STRENGTH_WARN_LEVEL = 0.1


@dataclass(frozen=True)
class Constants:
    """SI constants used throughout.

    ``M_P`` and ``L_P`` are the conventional rounded Planck-scale values
    (22 ug, 1.6e-35 m).  Geometry that must be internally consistent (the
    uncertainty-curve minimum) uses the derived length hbar/(M_P c) instead
    of the rounded ``L_P``.
    """

    hbar: float = 1.054571817e-34  # J s
    c: float = 299792458.0  # m / s
    k_B: float = 1.380649e-23  # J / K
    M_P: float = 2.2e-8  # kg
    L_P: float = 1.6e-35  # m

    @property
    def planck_momentum(self):
        return self.M_P * self.c

    @property
    def planck_length_derived(self):
        return self.hbar / (self.M_P * self.c)


CONSTANTS = Constants()


def unsafe_override_constants(**values):
    """Testing-only escape hatch: mutate the shared constants in place.

    Every module holds a reference to the same ``CONSTANTS`` instance, so an
    in-place override is visible everywhere; parameters constructed before
    the override keep their cached derived quantities.  Never use this
    outside of tests or the CLI's --unsafe-constants flag.
    """
    for name, value in values.items():
        if name not in ("hbar", "c", "k_B", "M_P", "L_P"):
            raise ValueError(f"unknown constant {name!r}")
        object.__setattr__(CONSTANTS, name, float(value))


@dataclass(frozen=True)
class DeformationModel:
    """Tagged deformation choice with its bare dimensionless parameter.

    ``strength`` is the bare parameter (beta0, gamma0 or mu0); use
    :func:`dimensionless_strength` to convert it to the small expansion
    parameter for a given oscillator.
    """

    kind: str
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown deformation kind {self.kind!r}; expected one of {KINDS}")
        if self.strength < 0:
            raise ValueError("deformation strength must be nonnegative")
        if self.kind == "none" and self.strength != 0.0:
            raise ValueError("the undeformed model carries no strength parameter")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def beta(cls, beta0):
        return cls("beta", beta0)

    @classmethod
    def gamma(cls, gamma0):
        return cls("gamma", gamma0)

    @classmethod
    def mu(cls, mu0):
        return cls("mu", mu0)


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental configuration of the pulsed optomechanical probe."""

    mass: float  # kg
    omega_m: float  # rad/s
    finesse: float
    wavelength: float  # m
    n_photons: float  # mean photons per pulse
    n_runs: float = 1.0
    n_thermal: float = 0.0
    eta: float = 1.0  # per-pulse distortion factor
    temperature: float = 0.05  # K
    quality: float = 1e7
    sigma_out: float = 0.5
    x0: float = field(init=False)
    lam: float = field(init=False)

    def __post_init__(self):
        for name in ("mass", "omega_m", "finesse", "wavelength", "n_photons", "n_runs", "temperature", "quality", "sigma_out"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_thermal < 0:
            raise ValueError("n_thermal must be nonnegative")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        x0 = np.sqrt(CONSTANTS.hbar / (self.mass * self.omega_m))
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "lam", 4.0 * self.finesse * x0 / self.wavelength)

    @property
    def p0(self):
        return np.sqrt(CONSTANTS.hbar * self.mass * self.omega_m)


def dimensionless_strength(model: DeformationModel, params: PhysicalParams):
    """Small expansion parameter (beta, gamma or mu) for the given oscillator."""
    s0 = model.strength
    if model.kind == "none":
        return 0.0
    if model.kind == "beta":
        return s0 * CONSTANTS.hbar * params.omega_m * params.mass / CONSTANTS.planck_momentum**2
    if model.kind == "gamma":
        return s0 * params.p0 / CONSTANTS.planck_momentum
    return s0 * (params.mass / CONSTANTS.M_P) ** 2


@dataclass(frozen=True)
class NestedCommutators:
    """First-order nested commutator coefficients i C_k = [X, C_{k-1}], C_0 = P.

    Each coefficient is a polynomial in P given as {power: coefficient}; all
    C_k with k >= 4 vanish at first order.
    """

    c1: dict
    c2: dict
    c3: dict

    def as_tuple(self):
        return (self.c1, self.c2, self.c3)


def nested_commutators(model: DeformationModel, strength):
    """Nested commutator coefficients for the given dimensionless strength."""
    s = float(strength)
    if model.kind == "none" or s == 0.0:
        return NestedCommutators({0: 1.0}, {}, {})
    if model.kind == "beta":
        return NestedCommutators({0: 1.0, 2: s}, {1: 2.0 * s}, {0: 2.0 * s})
    if model.kind == "gamma":
        return NestedCommutators({0: 1.0, 1: -s}, {0: -s}, {})
    return NestedCommutators({0: 1.0 + s}, {}, {})


def _check_strength_regime(model, strength):
    if model.kind == "mu":  # exact rescaling, no perturbative limit
        return
    if strength >= STRENGTH_HARD_LIMIT:
        raise OutOfRegimeError(
            f"dimensionless strength {strength:.3g} violates strength < 1 for kind={model.kind}",
            inequality="strength < 1",
        )
    if strength >= STRENGTH_WARN_LEVEL:
        warnings.warn(
            f"dimensionless strength {strength:.3g} is above the {STRENGTH_WARN_LEVEL} warn level; "
            "first-order results degrade",
            stacklevel=2,
        )


def momentum_eigenvalues(p, model: DeformationModel, strength):
    """Deformed momentum as a scalar function of the momentum eigenvalues."""
    p = np.asarray(p, dtype=float)
    s = float(strength)
    if model.kind == "none" or s == 0.0:
        return p
    _check_strength_regime(model, s)
    if model.kind == "beta":
        return p * (1.0 + s * p * p / 3.0)
    if model.kind == "gamma":
        return p - s * p * p / 2.0
    return p * (1.0 + s)


def deformed_momentum(P: FockOperator, model: DeformationModel, strength):
    """First-order deformed momentum operator P'.

    ``strength`` is the dimensionless output of :func:`dimensionless_strength`.
    """
    s = float(strength)
    if model.kind == "none" or s == 0.0:
        return P
    _check_strength_regime(model, s)
    m = P.matrix
    if model.kind == "beta":
        out = m + (s / 3.0) * (m @ m @ m)
    elif model.kind == "gamma":
        out = m - (s / 2.0) * (m @ m)
    else:
        out = (1.0 + s) * m
    return FockOperator(out, hermitian=True)


def composite_chi(n_particles, regime):
    """Rescaling of the bare deformation parameter for an N-particle system.

    ``uncorrelated`` constituents give 1/N, ``fully-correlated`` give 1/N^2.
    """
    if not isinstance(n_particles, (int, np.integer)) or n_particles < 1:
        raise ValueError(f"particle number must be a positive integer, got {n_particles!r}")
    if regime == "uncorrelated":
        return 1.0 / n_particles
    if regime == "fully-correlated":
        return 1.0 / n_particles**2
    raise ValueError(f"regime must be 'uncorrelated' or 'fully-correlated', got {regime!r}")
