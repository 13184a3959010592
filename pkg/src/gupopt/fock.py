"""Truncated Fock-space linear algebra.

Dense operators and states on the number basis |0>..|dim-1>, with the ladder
and quadrature operators, coherent/thermal state constructors, a matrix
exponential, displacement operators and expectation values.  Everything here
is dimensionless; physical units enter only through the deformation models.

Truncation is explicit: constructors that cannot represent the requested
state below the cutoff raise :class:`CutoffInsufficientError`, and
:func:`converged_by_doubling` implements the convergence contract used to
validate cutoff choices.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .errors import CutoffInsufficientError, InvalidDimensionError, NumericError

HERMITIAN_TOL = 1e-12
PURE_NORM_TOL = 1e-10
MIXED_TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
TAIL_TOL = 1e-10


def _check_dim(dim):
    if not isinstance(dim, (int, np.integer)) or dim < 2:
        raise InvalidDimensionError(f"Fock cutoff must be an integer >= 2, got {dim!r}")
    return int(dim)


@dataclass(frozen=True)
class FockOperator:
    """Dense operator on a truncated Fock space.

    ``hermitian=True`` asserts M = M^dag entrywise to 1e-12 at construction.
    """

    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidDimensionError(f"operator matrix must be square, got shape {m.shape}")
        _check_dim(m.shape[0])
        if not np.all(np.isfinite(m)):
            raise NumericError("operator matrix contains non-finite entries")
        if self.hermitian and np.abs(m - m.conj().T).max() > HERMITIAN_TOL:
            raise ValueError("operator flagged hermitian is not hermitian to 1e-12")
        m = np.ascontiguousarray(m)
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def dagger(self):
        return FockOperator(self.matrix.conj().T, hermitian=self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            if other.dim != self.dim:
                raise InvalidDimensionError("operator dimensions differ")
            return FockOperator(self.matrix @ other.matrix)
        return NotImplemented


@dataclass(frozen=True)
class FockState:
    """Pure state (vector) or mixed state (density matrix) with explicit cutoff."""

    data: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.complex128)
        if d.ndim == 1:
            _check_dim(d.shape[0])
            if abs(np.linalg.norm(d) - 1.0) > PURE_NORM_TOL:
                raise ValueError("pure state vector is not normalized to 1e-10")
        elif d.ndim == 2 and d.shape[0] == d.shape[1]:
            _check_dim(d.shape[0])
            if abs(np.trace(d).real - 1.0) > MIXED_TRACE_TOL or abs(np.trace(d).imag) > MIXED_TRACE_TOL:
                raise ValueError("density matrix trace is not 1 to 1e-10")
            if np.abs(d - d.conj().T).max() > HERMITIAN_TOL * 10:
                raise ValueError("density matrix is not hermitian")
            if np.linalg.eigvalsh(d).min() < EIGENVALUE_FLOOR:
                raise ValueError("density matrix has an eigenvalue below -1e-10")
        else:
            raise InvalidDimensionError(f"state must be a vector or square matrix, got shape {d.shape}")
        d = np.ascontiguousarray(d)
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @property
    def is_pure(self):
        return self.data.ndim == 1

    @property
    def dim(self):
        return self.data.shape[0]

    def density_matrix(self):
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)


def ladder(dim):
    """Annihilation operator and its conjugate transpose."""
    dim = _check_dim(dim)
    a = np.zeros((dim, dim), dtype=np.complex128)
    ns = np.arange(1, dim)
    a[ns - 1, ns] = np.sqrt(ns)
    return FockOperator(a), FockOperator(a.conj().T)


def number_operator(dim):
    dim = _check_dim(dim)
    return FockOperator(np.diag(np.arange(dim, dtype=np.complex128)), hermitian=True)


def quadratures(dim):
    """Dimensionless quadratures X = (a+a^dag)/sqrt2, P = -i(a-a^dag)/sqrt2, [X,P] = i."""
    a, adag = ladder(dim)
    x = (a.matrix + adag.matrix) / np.sqrt(2.0)
    p = -1j * (a.matrix - adag.matrix) / np.sqrt(2.0)
    return FockOperator(x, hermitian=True), FockOperator(p, hermitian=True)


def default_coherent_dim(alpha):
    """Cutoff heuristic for a coherent state of amplitude alpha."""
    am = abs(alpha)
    return int(np.ceil(am * am + 8.0 * am + 20.0))


def default_thermal_dim(nbar):
    """Cutoff heuristic for a thermal state of mean occupation nbar."""
    return int(np.ceil(20.0 * (nbar + 1.0)))


def _coherent_amplitudes(alpha, dim):
    # log-domain evaluation keeps large-|alpha| amplitudes finite
    n = np.arange(dim)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1, dim)))))
    mag = np.exp(-abs(alpha) ** 2 / 2.0 + n * np.log(abs(alpha)) - 0.5 * log_fact) if alpha != 0 else np.where(n == 0, 1.0, 0.0)
    phase = np.exp(1j * n * np.angle(alpha)) if alpha != 0 else np.ones(dim)
    return mag * phase


def coherent_state(alpha, dim=None):
    """Coherent state |alpha> truncated at ``dim``, renormalized.

    Raises :class:`CutoffInsufficientError` when the Poisson tail mass beyond
    the cutoff exceeds 1e-10.
    """
    alpha = complex(alpha)
    if dim is None:
        dim = default_coherent_dim(alpha)
    dim = _check_dim(dim)
    c = _coherent_amplitudes(alpha, dim)
    defect = 1.0 - float(np.sum(np.abs(c) ** 2))
    if defect > TAIL_TOL:
        raise CutoffInsufficientError(
            f"coherent cutoff dim={dim} leaves tail mass {defect:.2e} for |alpha|={abs(alpha):.3g}; "
            f"need dim >= {default_coherent_dim(alpha)}",
            needed_dim=default_coherent_dim(alpha),
        )
    return FockState(c / np.linalg.norm(c))


def thermal_state(nbar, dim=None):
    """Thermal density matrix with mean occupation nbar, renormalized to trace 1."""
    if nbar < 0:
        raise ValueError("thermal occupation must be nonnegative")
    if dim is None:
        dim = default_thermal_dim(nbar)
    dim = _check_dim(dim)
    if nbar == 0:
        rho = np.zeros((dim, dim), dtype=np.complex128)
        rho[0, 0] = 1.0
        return FockState(rho)
    q = nbar / (1.0 + nbar)
    tail = q**dim  # exact geometric tail mass
    if tail > TAIL_TOL:
        needed = int(np.ceil(np.log(TAIL_TOL) / np.log(q))) + 1
        raise CutoffInsufficientError(
            f"thermal cutoff dim={dim} leaves tail mass {tail:.2e} for nbar={nbar:.3g}; need dim >= {needed}",
            needed_dim=needed,
        )
    p = (1.0 - q) * q ** np.arange(dim)
    return FockState(np.diag(p / p.sum()).astype(np.complex128))


def matrix_exp(op):
    """Matrix exponential by Pade-13 scaling and squaring."""
    m = op.matrix if isinstance(op, FockOperator) else np.asarray(op, dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix_exp input contains non-finite entries")
    return FockOperator(_kernels.expm(np.ascontiguousarray(m, dtype=np.complex128)))


def displacement(z, dim):
    """Phase-space displacement e^{i(Re[z] X - Im[z] P)}.

    Shifts <X> by Im[z] and <P> by Re[z].
    """
    z = complex(z)
    x, p = quadratures(dim)
    return matrix_exp(1j * (z.real * x.matrix - z.imag * p.matrix))


def expect(op, state):
    """<psi|M|psi> for pure states, tr(rho M) for mixed states."""
    m = op.matrix if isinstance(op, FockOperator) else np.asarray(op)
    if m.shape[0] != state.dim:
        raise InvalidDimensionError(f"operator dim {m.shape[0]} does not match state dim {state.dim}")
    if state.is_pure:
        return complex(np.vdot(state.data, m @ state.data))
    return complex(np.einsum("ij,ji->", state.data, m))


@dataclass(frozen=True)
class DoublingReport:
    value: complex
    value_doubled: complex
    change: float
    converged: bool


def converged_by_doubling(fn: Callable[[int], complex], dim, tol=1e-8):
    """Convergence-by-doubling contract: fn(dim) vs fn(2*dim).

    ``fn`` maps a cutoff to the expectation value of interest.  The result is
    trusted only when doubling the cutoff moves it by less than ``tol``.
    """
    dim = _check_dim(dim)
    v1 = fn(dim)
    v2 = fn(2 * dim)
    change = abs(v2 - v1)
    return DoublingReport(v1, v2, change, change < tol)
