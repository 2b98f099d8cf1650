"""Dense spin-1 linear algebra.

Operators are plain ``(3, 3)`` complex NumPy arrays and states are length-3
complex vectors. Rows and columns are ordered ``(|+1>, |0>, |-1>)``
everywhere. Hamiltonians carry angular frequency (rad/s, hbar = 1) and
inverse temperatures carry seconds.
"""
from typing import NamedTuple

import numpy as np

from . import kernels

LEVELS = (+1, 0, -1)

HERMITIAN_TOL = 1e-12

_SQRT_HALF = np.sqrt(0.5)


def level_index(level):
    """Array index of the spin projection ``level`` in the (+1, 0, -1) ordering."""
    try:
        return LEVELS.index(level)
    except ValueError:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}") from None


def spin1_operator(axis):
    """Spin-1 angular momentum component ``I_x``, ``I_y`` or ``I_z``."""
    if axis == "z":
        return np.diag([1.0, 0.0, -1.0]).astype(np.complex128)
    if axis == "x":
        op = np.zeros((3, 3), dtype=np.complex128)
        op[0, 1] = op[1, 0] = op[1, 2] = op[2, 1] = _SQRT_HALF
        return op
    if axis == "y":
        op = np.zeros((3, 3), dtype=np.complex128)
        op[0, 1] = op[1, 2] = -1j * _SQRT_HALF
        op[1, 0] = op[2, 1] = 1j * _SQRT_HALF
        return op
    raise ValueError(f"axis must be 'x', 'y' or 'z', got {axis!r}")


def hermiticity_defect(op):
    op = np.asarray(op)
    return float(np.max(np.abs(op - op.conj().T)))


def unitarity_defect(u):
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(3))))


def check_hermitian(h, name="operator"):
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {h.shape}")
    defect = hermiticity_defect(h)
    scale = max(1.0, float(np.max(np.abs(h))))
    if defect > HERMITIAN_TOL * scale:
        raise ValueError(f"{name} is not Hermitian: max|H - H^dagger| = {defect:.3e}")
    return h


class EigenSystem(NamedTuple):
    """Ascending eigenvalues and matching eigenvectors (columns of ``vectors``)."""

    values: np.ndarray
    vectors: np.ndarray

    def state(self, k):
        return self.vectors[:, k]

    def projector(self, k):
        v = self.vectors[:, k]
        return np.outer(v, v.conj())


def eigh(h):
    """Spectral decomposition of a Hermitian 3x3 operator.

    Eigenvalues are sorted ascending. Each eigenvector has its
    largest-magnitude component real and positive (the first such component
    when several tie within 1e-12), so conditional-probability tables are
    reproducible. Inside a degenerate eigenspace the basis is whatever the
    Jacobi sweep produces; two-point-measurement tables are then convention
    dependent.
    """
    h = check_hermitian(h, "H")
    w, v = kernels.eigh_batch(h[None])
    return EigenSystem(w[0], v[0])


def expm_minus_iH_dt(h, dt):
    """Unitary ``exp(-i H dt)`` built from the eigen-decomposition of ``H``."""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    es = eigh(h)
    return (es.vectors * np.exp(-1j * es.values * dt)) @ es.vectors.conj().T


def boltzmann_weights(energies, beta):
    """Normalized ``exp(-beta*E)`` with the exponent shifted for stability."""
    energies = np.asarray(energies, dtype=float)
    x = -beta * energies
    w = np.exp(x - x.max())
    return w / w.sum()


def log_partition(energies, beta):
    x = -beta * np.asarray(energies, dtype=float)
    m = x.max()
    return float(m + np.log(np.exp(x - m).sum()))


def gibbs_state(h, beta):
    """Thermal state ``exp(-beta H) / Z``."""
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    es = eigh(h)
    p = boltzmann_weights(es.values, beta)
    return (es.vectors * p) @ es.vectors.conj().T


def dephase_pair(rho, level):
    """Remove every coherence between ``level`` (+1 or -1) and the other two levels.

    Populations are untouched, which makes the map idempotent and trace
    preserving.
    """
    if level not in (+1, -1):
        raise ValueError(f"level must be +1 or -1, got {level!r}")
    out = np.array(rho, dtype=np.complex128, copy=True)
    k = level_index(level)
    diag = out[k, k]
    out[k, :] = 0.0
    out[:, k] = 0.0
    out[k, k] = diag
    return out


def is_density_matrix(rho, tol=1e-12):
    rho = np.asarray(rho)
    if hermiticity_defect(rho) > tol or abs(np.trace(rho) - 1.0) > tol:
        return False
    w, _ = kernels.eigh_batch(0.5 * (rho + rho.conj().T))
    return bool(w.min() >= -tol)


class NumericalGuardError(ValueError):
    """A numerical validity guard (step density, RWA separation, ...) was violated."""
