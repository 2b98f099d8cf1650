"""Pure NumPy implementations of the 3x3 numerical kernels.

This module is the fallback used when the compiled ``_kernels`` extension is
unavailable. Both backends expose the same three functions and agree to
rounding error; see ``benchmarks/bench_kernels.py`` for a timing comparison.

Step Hamiltonians for propagation are passed in coefficient form::

    H_k = alpha[k] * I_z + beta[k] * I_x + gamma[k] * I_z**2

which covers both the switching protocol and the lab-frame RF Hamiltonian.
"""
import numpy as np

NAME = "python"

_SQRT_HALF = np.sqrt(0.5)
_MAX_SWEEPS = 30
_CHUNK = 1 << 15
_PAIRS = ((0, 1), (0, 2), (1, 2))


def _jacobi_batch(a):
    """Cyclic complex Jacobi on a batch of Hermitian 3x3 matrices (in place)."""
    n = a.shape[0]
    v = np.zeros((n, 3, 3), dtype=np.complex128)
    v[:, 0, 0] = v[:, 1, 1] = v[:, 2, 2] = 1.0
    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    tiny = 1e-300
    idx = np.arange(n)
    for _ in range(_MAX_SWEEPS):
        off = np.abs(a[:, 0, 1]) ** 2 + np.abs(a[:, 0, 2]) ** 2 + np.abs(a[:, 1, 2]) ** 2
        if np.all(off <= (1e-17 * scale) ** 2 + tiny):
            break
        for p, q in _PAIRS:
            apq = a[:, p, q]
            r = np.abs(apq)
            active = r > 1e-300
            if not np.any(active):
                continue
            phase = np.where(active, apq / np.where(active, r, 1.0), 1.0)
            app = a[:, p, p].real
            aqq = a[:, q, q].real
            theta = np.where(active, (aqq - app) / (2.0 * np.where(active, r, 1.0)), 0.0)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            rot = np.zeros((n, 3, 3), dtype=np.complex128)
            rot[:, 0, 0] = rot[:, 1, 1] = rot[:, 2, 2] = 1.0
            rot[:, p, p] = c
            rot[:, p, q] = s
            rot[:, q, p] = -s * np.conj(phase)
            rot[:, q, q] = c * np.conj(phase)
            a = np.conj(np.swapaxes(rot, 1, 2)) @ a @ rot
            a[idx, q, p] = np.conj(a[idx, p, q])
            v = v @ rot
    return a, v


def _sort_and_fix_phase(w, v):
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    mag = np.abs(v)
    # first component within 1e-12 of the column maximum carries the phase
    lead = np.argmax(mag >= mag.max(axis=1, keepdims=True) - 1e-12, axis=1)
    pivot = np.take_along_axis(v, lead[:, None, :], axis=1)[:, 0, :]
    v = v * (np.conj(pivot) / np.abs(pivot))[:, None, :]
    return w, v


def eigh_batch(h):
    """Eigen-decompose a stack of Hermitian 3x3 matrices.

    Returns ``(w, v)`` with eigenvalues ascending along the last axis of ``w``
    and eigenvectors in the columns of ``v``; each column has its
    largest-magnitude component real and positive.
    """
    h = np.array(h, dtype=np.complex128, copy=True).reshape(-1, 3, 3)
    h = 0.5 * (h + np.conj(np.swapaxes(h, 1, 2)))
    a, v = _jacobi_batch(h)
    w = np.real(np.diagonal(a, axis1=1, axis2=2)).copy()
    return _sort_and_fix_phase(w, v)


def _coefficient_hamiltonians(alpha, beta, gamma):
    n = alpha.shape[0]
    h = np.zeros((n, 3, 3), dtype=np.complex128)
    h[:, 0, 0] = alpha + gamma
    h[:, 2, 2] = gamma - alpha
    off = beta * _SQRT_HALF
    h[:, 0, 1] = h[:, 1, 0] = off
    h[:, 1, 2] = h[:, 2, 1] = off
    return h


def _step_unitaries(alpha, beta, gamma, dt):
    w, v = eigh_batch(_coefficient_hamiltonians(alpha, beta, gamma))
    phases = np.exp(-1j * w * dt)
    return np.einsum("nij,nj,nkj->nik", v, phases, np.conj(v))


def _ordered_product(steps):
    # pairwise reduction keeps time order: later factors to the left
    while steps.shape[0] > 1:
        if steps.shape[0] % 2:
            steps = np.concatenate([steps, np.eye(3, dtype=np.complex128)[None]])
        steps = steps[1::2] @ steps[0::2]
    return steps[0]


def _as_coefficients(alpha, beta, gamma):
    alpha = np.ascontiguousarray(alpha, dtype=np.float64)
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    if not (alpha.shape == beta.shape == gamma.shape) or alpha.ndim != 1:
        raise ValueError("coefficient arrays must be 1-D and of equal length")
    return alpha, beta, gamma


def propagate_coeffs(alpha, beta, gamma, dt):
    """Ordered product of ``exp(-i H_k dt)`` over all steps, first step rightmost."""
    alpha, beta, gamma = _as_coefficients(alpha, beta, gamma)
    u = np.eye(3, dtype=np.complex128)
    for start in range(0, alpha.shape[0], _CHUNK):
        sl = slice(start, start + _CHUNK)
        u = _ordered_product(_step_unitaries(alpha[sl], beta[sl], gamma[sl], dt)) @ u
    return u


def evolve_coeffs(alpha, beta, gamma, dt, psi0):
    """State after every step; row 0 is ``psi0``, row k is the state after k steps."""
    alpha, beta, gamma = _as_coefficients(alpha, beta, gamma)
    n = alpha.shape[0]
    out = np.empty((n + 1, 3), dtype=np.complex128)
    out[0] = np.asarray(psi0, dtype=np.complex128)
    psi = out[0].copy()
    for start in range(0, n, _CHUNK):
        sl = slice(start, start + _CHUNK)
        steps = _step_unitaries(alpha[sl], beta[sl], gamma[sl], dt)
        for k, s in enumerate(steps, start=start + 1):
            psi = s @ psi
            out[k] = psi
    return out
