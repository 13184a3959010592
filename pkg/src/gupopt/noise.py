"""Noise budget: intracavity filtering, pulse distortion, thermal attenuation
and bath decoherence.

The optical pulse is filtered by the cavity before it kicks the mechanics,
reducing the per-photon interaction strength by the pulse-shape factor zeta.
Imperfect round trips multiply successive interaction strengths by eta,
which both rescales the deformation signal (eta_reduction) and couples the
outgoing light to the mechanical temperature (thermal_attenuation).  Between
pulses the oscillator talks to a Markovian bath; the resulting suppression
of the optical mean has a closed form and a Monte Carlo estimator.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .deformations import CONSTANTS, DeformationModel, PhysicalParams
from .errors import CutoffInsufficientError, NumericError, OutOfRegimeError
from .protocol import _working_dim, _x_eigensystem

PULSE_NORM_TOL = 1e-8
ZETA_DEFAULT_TOL = 1e-6

_ETA_EXPONENTS = {"beta": 7, "gamma": 5, "mu": 3, "none": 0}

# integral of the squared bath window over the three-quarter-period pulse
# sequence: int f^2 dt = (pi + 1)/omega for
# f = cos*[0,T/4] + sin*[0,T/2] - cos*[0,3T/4]
_BATH_WINDOW_INTEGRAL = np.pi + 1.0


def _envelope(kind, duration, t):
    if kind == "square":
        return np.where((t >= 0.0) & (t <= duration), 1.0 / np.sqrt(duration), 0.0)
    if kind == "gaussian":
        sig = duration
        return (2.0 * np.pi * sig**2) ** (-0.25) * np.exp(-(t**2) / (4.0 * sig**2))
    if kind == "exponential":
        return np.where(t >= 0.0, np.sqrt(2.0 / duration) * np.exp(-t / duration), 0.0)
    raise ValueError(f"unknown pulse kind {kind!r}")


def _default_grid(kind, duration, points):
    # discontinuous kinds carry explicit zero samples and edge knots at the
    # eps scale, so the sampled pulse model is refinement-independent
    eps = 1e-9 * duration
    if kind == "square":
        body = np.linspace(0.0, duration, points)
        return np.concatenate(([-0.02 * duration, -eps], body, [duration + eps, duration * 1.02]))
    if kind == "gaussian":
        return np.linspace(-6.0 * duration, 6.0 * duration, points)
    body = np.linspace(0.0, 14.0 * duration, points)
    return np.concatenate(([-0.02 * duration, -eps], body))


@dataclass(frozen=True)
class PulseShape:
    """Sampled drive envelope, normalized so that int dt amp^2 = 1."""

    kind: str
    duration: float
    times: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.amplitudes, dtype=float)
        if t.ndim != 1 or t.shape != a.shape or t.size < 8:
            raise ValueError("pulse needs matching 1-d time/amplitude samples (>= 8 points)")
        if np.any(np.diff(t) <= 0):
            raise ValueError("pulse time grid must be strictly increasing")
        norm = np.trapezoid(a * a, t)
        if abs(norm - 1.0) > PULSE_NORM_TOL:
            raise ValueError(f"pulse is not normalized: int amp^2 dt = {norm:.10g}")
        for name, arr in (("times", t), ("amplitudes", a)):
            arr = np.ascontiguousarray(arr)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def analytic(cls, kind, duration, points=4001):
        if duration <= 0:
            raise ValueError("pulse duration must be positive")
        t = _default_grid(kind, duration, points)
        a = _envelope(kind, duration, t)
        a = a / np.sqrt(np.trapezoid(a * a, t))
        return cls(kind, duration, t, a)

    @classmethod
    def square(cls, duration, points=4001):
        return cls.analytic("square", duration, points)

    @classmethod
    def gaussian(cls, duration, points=4001):
        return cls.analytic("gaussian", duration, points)

    @classmethod
    def exponential(cls, duration, points=4001):
        return cls.analytic("exponential", duration, points)

    @classmethod
    def from_table(cls, source, renormalize=False):
        """Two-column whitespace-separated time/amplitude table ('#' comments)."""
        data = np.loadtxt(source, comments="#")
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError("pulse table must have exactly two columns: time amplitude")
        t, a = data[:, 0], data[:, 1]
        if renormalize:
            a = a / np.sqrt(np.trapezoid(a * a, t))
        duration = float(t[-1] - t[0])
        return cls("table", duration, t, a)

    def refined(self):
        """Grid with midpoints inserted; analytic kinds re-sampled exactly."""
        t = self.times
        mid = 0.5 * (t[:-1] + t[1:])
        tt = np.sort(np.concatenate([t, mid]))
        if self.kind == "table":
            aa = np.interp(tt, t, self.amplitudes)
        else:
            aa = _envelope(self.kind, self.duration, tt)
        aa = aa / np.sqrt(np.trapezoid(aa * aa, tt))
        return PulseShape(self.kind, self.duration, tt, aa)


def intracavity_zeta(pulse: PulseShape, kappa, tol=ZETA_DEFAULT_TOL, max_refinements=12):
    """Pulse-shape correction zeta to the interaction strength.

    Mean-field solution of the driven cavity: the envelope is low-pass
    filtered with rate kappa, zeta = int dt g(t)^2 for the filtered envelope
    g (the operator-valued input noise has zero mean and drops out).  The
    grid is extended by the cavity ring-down tail and refined by step
    halving until the value moves by less than ``tol``.
    """
    if kappa <= 0:
        raise ValueError("cavity decay rate kappa must be positive")
    current = pulse
    previous = None
    for _ in range(max_refinements + 1):
        t, amp = _extended_grid(current, kappa)
        g = _kernels.exp_filter(t, amp, kappa)
        value = float(np.trapezoid(g * g, t))
        if previous is not None and abs(value - previous) < tol:
            return value
        previous = value
        current = current.refined()
    raise NumericError(
        f"zeta quadrature did not converge to {tol:g} after {max_refinements} refinements"
    )


def _extended_grid(pulse, kappa):
    t = pulse.times
    amp = pulse.amplitudes
    body_dt = float(np.median(np.diff(t)))
    dt = min(body_dt, 1.0 / (20.0 * kappa))
    tail_len = 10.0 / kappa + 5.0 * pulse.duration
    tail = np.arange(t[-1] + dt, t[-1] + tail_len, dt)
    tt = np.concatenate([t, tail])
    aa = np.concatenate([amp, np.zeros(tail.size)])
    return tt, aa


def eta_reduction(model, eta):
    """Reduction of the deformation signal from per-pulse distortion eta.

    The loop phases scale as lambda^4, lambda^3, lambda^2 for the beta,
    gamma and mu models, turning the per-pulse factor eta into eta^7, eta^5
    and eta^3 respectively.
    """
    kind = model.kind if isinstance(model, DeformationModel) else model
    if kind not in _ETA_EXPONENTS:
        raise ValueError(f"unknown deformation kind {kind!r}")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return eta ** _ETA_EXPONENTS[kind]


def thermal_attenuation(nbar, lam, eta):
    """Suppression e^{-nbar l^2 (1-eta^2)(1-eta^4)/2} of the optical mean."""
    if nbar < 0 or lam < 0:
        raise ValueError("nbar and lambda must be nonnegative")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    return float(np.exp(-nbar * lam**2 * (1.0 - eta**2) * (1.0 - eta**4) / 2.0))


def decoherence_factor(lam, temperature, omega_m, quality):
    """First-order bath correction 1 - l^2 k_B T / (hbar omega_m Q)."""
    if temperature < 0 or omega_m <= 0 or quality <= 0:
        raise ValueError("temperature must be >= 0 and omega_m, Q positive")
    corr = lam**2 * CONSTANTS.k_B * temperature / (CONSTANTS.hbar * omega_m * quality)
    if corr >= 1.0:
        raise OutOfRegimeError(
            f"bath correction {corr:.3g} violates first-order validity (correction < 1)",
            inequality="lambda^2 k_B T / (hbar omega_m Q) < 1",
        )
    return 1.0 - corr


@dataclass(frozen=True)
class BathMCResult:
    """Monte Carlo estimate of the bath-induced mean-field factor.

    ``closed_form`` is the exact Gaussian average of the simulated model,
    exp(-l^2 D (pi+1) / (2 omega)); ``quoted_first_order`` is the quoted
    budget formula 1 - l^2 k_B T/(hbar omega Q), whose prefactor understates
    the model's window algebra by ~(pi+1).  ``flagged`` marks the >10 %
    disagreement between the two; the discrepancy is reported, not corrected.
    """

    estimate: complex
    std_error: float
    samples: int
    closed_form: float
    quoted_first_order: float
    discrepancy_ratio: float
    flagged: bool


def bath_monte_carlo(lam, temperature, omega_m, quality, samples, seed, steps_per_period=200):
    """Sample the bath phases picked up between the four pulses.

    White-noise realizations B(t) with covariance gamma_m coth(hbar omega /
    2 k_B T) delta(t-t') are integrated against the three accumulated-noise
    windows (cos over the first quarter period, sin over the first half,
    -cos over three quarters); the optical mean is multiplied by the
    averaged phase factor e^{i lam S} with S the window sum.  Fixed seed and
    backend give bit-identical results.
    """
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    if temperature < 0 or omega_m <= 0 or quality <= 0:
        raise ValueError("temperature must be >= 0 and omega_m, Q positive")
    gamma_m = omega_m / quality
    if temperature == 0.0:
        coth = 1.0
    else:
        coth = 1.0 / np.tanh(CONSTANTS.hbar * omega_m / (2.0 * CONSTANTS.k_B * temperature))
    diffusion = gamma_m * coth

    period = 2.0 * np.pi / omega_m
    dt = period / steps_per_period
    nsteps = int(np.ceil(0.75 * period / dt))
    t = (np.arange(nsteps) + 0.5) * dt
    windows = (
        np.cos(omega_m * t) * (t < 0.25 * period)
        + np.sin(omega_m * t) * (t < 0.5 * period)
        - np.cos(omega_m * t) * (t < 0.75 * period)
    )
    scale = lam * np.sqrt(diffusion * dt)

    rng = np.random.default_rng(seed)
    s_re = s_im = s_re2 = 0.0
    remaining = int(samples)
    chunk = 8192
    while remaining > 0:
        rows = min(chunk, remaining)
        gauss = rng.standard_normal((rows, nsteps))
        a, b, c = _kernels.mc_reduce(gauss, windows, scale)
        s_re += a
        s_im += b
        s_re2 += c
        remaining -= rows

    mean_re = s_re / samples
    mean_im = s_im / samples
    var_re = max(s_re2 / samples - mean_re**2, 0.0)
    std_error = float(np.sqrt(var_re / samples))

    closed = float(np.exp(-(lam**2) * diffusion * _BATH_WINDOW_INTEGRAL / (2.0 * omega_m)))
    quoted = 1.0 - lam**2 * CONSTANTS.k_B * temperature / (CONSTANTS.hbar * omega_m * quality)
    if quoted != 1.0:
        ratio = (1.0 - closed) / (1.0 - quoted)
    else:
        ratio = 1.0
    return BathMCResult(
        estimate=complex(mean_re, mean_im),
        std_error=std_error,
        samples=int(samples),
        closed_form=closed,
        quoted_first_order=quoted,
        discrepancy_ratio=float(ratio),
        flagged=bool(abs(ratio - 1.0) > 0.1),
    )


@dataclass(frozen=True)
class EtaCheckReport:
    """Operator-distance check of the distorted-loop factorization.

    The distorted loop with strengths l, eta l, eta^2 l, eta^3 l is compared
    against (eta^3-reduced Kerr phase) x (residual P and X displacements).
    ``residuals`` uses the residual-displacement exponents as quoted
    (+eta l (1-eta^2) n on P); ``residuals_exact`` flips that sign, in which
    convention the factorization is an exact operator identity (the split of
    the net displacement into P- and X-factors supplies the phase that turns
    the raw loop phase (eta^5+eta)/2 into exactly eta^3).  Both are reported;
    nothing is asserted here.
    """

    eta: float
    lam: float
    residuals: np.ndarray
    residuals_exact: np.ndarray
    edge_margin: int

    @property
    def max_residual(self):
        return float(self.residuals.max())

    @property
    def max_residual_exact(self):
        return float(self.residuals_exact.max())


def xi_eta_check(lam, eta, opt_dim, mech_dim, edge_margin=4):
    """Build the distorted four-displacement loop and test its factorization."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    if opt_dim < 1 or mech_dim < 2 + edge_margin:
        raise CutoffInsufficientError("mech_dim too small for the requested edge margin")
    strengths = lam * eta ** np.arange(4)  # l_1 .. l_4
    residuals = np.empty(opt_dim)
    residuals_exact = np.empty(opt_dim)
    cut = mech_dim - edge_margin
    for n in range(opt_dim):
        d = _working_dim(lam * n, mech_dim)
        xw, v, vh, s, sc = _x_eigensystem(d)
        base = np.zeros((d, mech_dim), dtype=np.complex128)
        base[np.arange(mech_dim), np.arange(mech_dim)] = 1.0

        def apply_x(theta, b):
            return v @ (np.exp(1j * theta * xw)[:, None] * (vh @ b))

        def apply_p(theta, b):
            return s[:, None] * (v @ (np.exp(1j * theta * xw)[:, None] * (vh @ (sc[:, None] * b))))

        b = apply_x(strengths[0] * n, base)
        b = apply_p(-strengths[1] * n, b)
        b = apply_x(-strengths[2] * n, b)
        lhs = apply_p(strengths[3] * n, b)[:mech_dim, :]

        kerr = np.exp(-1j * eta**3 * lam**2 * n * n)
        shifted = apply_x(lam * (1.0 - eta**2) * n, base)
        rhs_quoted = (kerr * apply_p(eta * lam * (1.0 - eta**2) * n, shifted))[:mech_dim, :]
        rhs_exact = (kerr * apply_p(-eta * lam * (1.0 - eta**2) * n, shifted))[:mech_dim, :]

        residuals[n] = np.abs(lhs[:cut, :cut] - rhs_quoted[:cut, :cut]).max()
        residuals_exact[n] = np.abs(lhs[:cut, :cut] - rhs_exact[:cut, :cut]).max()
    return EtaCheckReport(float(eta), float(lam), residuals, residuals_exact, edge_margin)


@dataclass(frozen=True)
class NoiseBudget:
    """Multiplicative reductions applied to the deformation signal."""

    zeta: float = 1.0
    eta: float = 1.0
    theta_reduction: float = 1.0
    thermal_factor: float = 1.0
    decoherence: float = 1.0

    def __post_init__(self):
        for name in ("zeta", "eta", "theta_reduction", "thermal_factor", "decoherence"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")

    @property
    def composite(self):
        """Combined reduction of the observable deformation rotation."""
        return self.theta_reduction * self.thermal_factor * self.decoherence


def build_noise_budget(model: DeformationModel, params: PhysicalParams, pulse=None, kappa=None):
    """Assemble the budget from the experiment parameters.

    ``zeta`` needs an explicit pulse and cavity rate; without them the
    filtering factor stays at unity (it rescales lambda itself rather than
    the composite signal reduction).
    """
    zeta = 1.0
    if pulse is not None:
        if kappa is None:
            raise ValueError("kappa is required together with a pulse")
        zeta = intracavity_zeta(pulse, kappa)
    return NoiseBudget(
        zeta=zeta,
        eta=params.eta,
        theta_reduction=eta_reduction(model, params.eta),
        thermal_factor=thermal_attenuation(params.n_thermal, params.lam, params.eta),
        decoherence=decoherence_factor(params.lam, params.temperature, params.omega_m, params.quality),
    )
