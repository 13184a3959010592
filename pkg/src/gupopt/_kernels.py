"""Hot numeric kernels, compiled with numba when available.

Each kernel has a single source; ``maybe_njit`` compiles it unless the
``GUPOPT_NO_NUMBA`` flag selects the plain-numpy path.  The Monte Carlo
reduction additionally has a vectorized numpy implementation because the
scalar loop is only attractive under JIT.
"""

import numpy as np

from ._accel import HAVE_NUMBA, maybe_njit

# Pade-13 coefficients and scaling threshold (1-norm) for the matrix
# exponential; backward error below 1e-13 for double precision.
_PADE13_B = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_PADE13_THETA = 5.371920351148152


def _expm_impl(a):
    b = _PADE13_B
    n = a.shape[0]
    norm = np.abs(a).sum(axis=0).max()
    squarings = 0
    if norm > _PADE13_THETA:
        squarings = int(np.ceil(np.log2(norm / _PADE13_THETA)))
    m = a / (2.0**squarings)
    ident = np.eye(n, dtype=np.complex128)
    m2 = m @ m
    m4 = m2 @ m2
    m6 = m4 @ m2
    u = m @ (m6 @ (b[13] * m6 + b[11] * m4 + b[9] * m2) + b[7] * m6 + b[5] * m4 + b[3] * m2 + b[1] * ident)
    v = m6 @ (b[12] * m6 + b[10] * m4 + b[8] * m2) + b[6] * m6 + b[4] * m4 + b[2] * m2 + b[0] * ident
    r = np.ascontiguousarray(np.linalg.solve(v - u, v + u))
    for _ in range(squarings):
        r = np.ascontiguousarray(r @ r)
    return r


expm = maybe_njit(cache=True)(_expm_impl)


def _exp_filter_impl(t, amp, kappa):
    """Causal one-pole response g(t) = kappa * int_{-inf}^t e^{-kappa (t-s)} amp(s) ds.

    Trapezoid accumulation of the convolution integral; stable for
    arbitrarily long grids because only decaying exponentials appear.
    """
    n = t.shape[0]
    g = np.zeros(n)
    for i in range(1, n):
        dt = t[i] - t[i - 1]
        decay = np.exp(-kappa * dt)
        g[i] = g[i - 1] * decay + kappa * 0.5 * dt * (amp[i] + amp[i - 1] * decay)
    return g


def _exp_filter_numpy(t, amp, kappa):
    """Vectorized scan of the same recurrence, rescaled block by block.

    Within a block the recurrence g_i = g_{i-1} d_i + q_i unrolls to
    g_i = E_i (g_0 + sum q_k / E_k) with E_i the cumulative decay; blocks are
    capped at kappa * span <= 300 so the rescaling never overflows.
    """
    n = t.shape[0]
    dt = np.diff(t)
    decay = np.exp(-kappa * dt)
    q = kappa * 0.5 * dt * (amp[1:] + amp[:-1] * decay)
    g = np.zeros(n)
    start = 0
    while start < n - 1:
        span = np.searchsorted(t, t[start] + 300.0 / kappa, side="right")
        stop = min(max(span, start + 2), n)
        log_e = -kappa * (t[start + 1 : stop] - t[start])
        e = np.exp(log_e)
        g[start + 1 : stop] = e * (g[start] + np.cumsum(q[start : stop - 1] / e))
        start = stop - 1
    return g


exp_filter = maybe_njit(cache=True)(_exp_filter_impl) if HAVE_NUMBA else _exp_filter_numpy


def _apply_xi_impl(v, vh, xw, pw, sdiag, sconj, theta, batch):
    """Apply the four-displacement loop e^{i th P'} e^{-i th X} e^{-i th P'} e^{i th X}
    to a column batch, using the shared eigenbasis of the position quadrature.

    ``v``/``vh`` diagonalize X (x-eigenvalues ``xw``); the momentum factors use
    the same basis conjugated by the Fock-parity phases ``sdiag`` with the
    (possibly deformed) momentum eigenvalues ``pw``.
    """
    phx = np.exp(1j * theta * xw)
    php = np.exp(1j * theta * pw)
    b = v @ (phx.reshape(-1, 1) * (vh @ batch))
    b = sdiag.reshape(-1, 1) * (v @ (np.conj(php).reshape(-1, 1) * (vh @ (sconj.reshape(-1, 1) * b))))
    b = v @ (np.conj(phx).reshape(-1, 1) * (vh @ b))
    b = sdiag.reshape(-1, 1) * (v @ (php.reshape(-1, 1) * (vh @ (sconj.reshape(-1, 1) * b))))
    return b


apply_xi = maybe_njit(cache=True)(_apply_xi_impl)


def _mc_reduce_loop(gauss, weights, scale):
    ns = gauss.shape[0]
    m = gauss.shape[1]
    s_re = 0.0
    s_im = 0.0
    s_re2 = 0.0
    for i in range(ns):
        acc = 0.0
        for j in range(m):
            acc += gauss[i, j] * weights[j]
        ph = scale * acc
        c = np.cos(ph)
        s = np.sin(ph)
        s_re += c
        s_im += s
        s_re2 += c * c
    return s_re, s_im, s_re2


_mc_reduce_jit = maybe_njit(cache=True)(_mc_reduce_loop)


def _mc_reduce_numpy(gauss, weights, scale):
    ph = scale * (gauss * weights[None, :]).sum(axis=1)
    c = np.cos(ph)
    return float(c.sum()), float(np.sin(ph).sum()), float((c * c).sum())


def mc_reduce(gauss, weights, scale):
    """Sums of cos/sin/cos^2 of the per-sample noise phases."""
    if HAVE_NUMBA:
        return _mc_reduce_jit(gauss, weights, scale)
    return _mc_reduce_numpy(gauss, weights, scale)
