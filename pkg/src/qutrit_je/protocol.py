"""Switching protocol ``H(t) = lam * (a(t) I_z + b(t) I_x)`` on ``[0, tau]``.

The default ramps are ``a(t) = 1 - t/(4 tau)`` and the triangle
``b(t) = 1 - |2t/tau - 1|``, so both endpoint Hamiltonians are diagonal.
Alternative ramps are registered by name for control experiments: the
``"constant"`` a-ramp holds ``a = 1`` and the ``"off"`` b-ramp holds ``b = 0``.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import spin1_operator

DEFAULT_LAMBDA = -np.sqrt(2.0) * np.pi * 5000.0

IZ = spin1_operator("z")
IX = spin1_operator("x")


def _a_linear(t, tau):
    return 1.0 - t / (4.0 * tau), np.full_like(t, -1.0 / (4.0 * tau)), t - t * t / (8.0 * tau)


def _a_constant(t, tau):
    return np.ones_like(t), np.zeros_like(t), t.copy()


def _b_triangle(t, tau):
    x = 2.0 * t / tau - 1.0
    # right-hand slope at the kink itself; callers never differentiate there
    slope = np.where(t < 0.5 * tau, 2.0 / tau, -2.0 / tau)
    return 1.0 - np.abs(x), slope


def _b_off(t, tau):
    return np.zeros_like(t), np.zeros_like(t)


# name -> f(t, tau) returning (value, derivative, integral from 0) for a-ramps
A_RAMPS = {"linear": _a_linear, "constant": _a_constant}
# name -> f(t, tau) returning (value, derivative) for b-ramps
B_RAMPS = {"triangle": _b_triangle, "off": _b_off}


@dataclass(frozen=True)
class Schedule:
    """Switching protocol parameters; ``lam`` in rad/s, ``tau`` in seconds."""

    tau: float
    lam: float = DEFAULT_LAMBDA
    a_ramp: str = "linear"
    b_ramp: str = "triangle"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not np.isfinite(self.lam) or self.lam == 0:
            raise ValueError(f"lam must be finite and non-zero, got {self.lam}")
        if self.a_ramp not in A_RAMPS:
            raise ValueError(f"unknown a-ramp {self.a_ramp!r}; known: {sorted(A_RAMPS)}")
        if self.b_ramp not in B_RAMPS:
            raise ValueError(f"unknown b-ramp {self.b_ramp!r}; known: {sorted(B_RAMPS)}")

    @classmethod
    def from_microseconds(cls, tau_us, **kwargs):
        return cls(tau=tau_us * 1e-6, **kwargs)

    @property
    def kink(self):
        return 0.5 * self.tau if self.b_ramp == "triangle" else None


def _check_times(t, schedule):
    t = np.asarray(t, dtype=float)
    slack = 1e-12 * schedule.tau
    if np.any(t < -slack) or np.any(t > schedule.tau + slack):
        raise ValueError(f"time outside [0, tau={schedule.tau:g}]")
    return np.clip(t, 0.0, schedule.tau)


def ramp_arrays(t, schedule):
    """Vectorized ramps: ``(a, b, da/dt, db/dt, integral of a)`` at times ``t``."""
    t = np.atleast_1d(_check_times(t, schedule))
    a, da, a_int = A_RAMPS[schedule.a_ramp](t, schedule.tau)
    b, db = B_RAMPS[schedule.b_ramp](t, schedule.tau)
    return a, b, da, db, a_int


def ramp(t, schedule):
    """Ramp values ``(a(t), b(t))``."""
    a, b, *_ = ramp_arrays(t, schedule)
    return float(a[0]), float(b[0])


def h_of_t(t, schedule):
    a, b = ramp(t, schedule)
    return schedule.lam * (a * IZ + b * IX)


def dh_dt(t, schedule):
    """Analytic ``dH/dt``; undefined at the triangle kink ``t = tau/2``."""
    kink = schedule.kink
    if kink is not None and abs(t - kink) <= 1e-12 * schedule.tau:
        raise ValueError("dH/dt is undefined at the ramp kink t = tau/2")
    _, _, da, db, _ = ramp_arrays(t, schedule)
    return schedule.lam * (da[0] * IZ + db[0] * IX)


def coefficients(t, schedule):
    """Kernel coefficients ``(alpha, beta, gamma)`` of ``H`` at the times ``t``."""
    a, b, *_ = ramp_arrays(t, schedule)
    return schedule.lam * a, schedule.lam * b, np.zeros_like(a)


def spin_labels(schedule):
    """Spin label of each ascending-energy eigenstate along the protocol.

    Eigenvalues are ``lam * r(t) * (+1, 0, -1)`` with ``r > 0``, so for
    ``lam < 0`` ascending order is ``(+1, 0, -1)`` and for ``lam > 0`` it is
    reversed.
    """
    return (+1, 0, -1) if schedule.lam < 0 else (-1, 0, +1)


def _factor_on_grid(schedule, n):
    t = np.linspace(0.0, schedule.tau, n)
    kink = schedule.kink
    if kink is not None:
        t = t[np.abs(t - kink) > 1e-12 * schedule.tau]
    a, b, da, db, _ = ramp_arrays(t, schedule)
    lam = schedule.lam
    h = lam * (a[:, None, None] * IZ + b[:, None, None] * IX)
    dh = lam * (da[:, None, None] * IZ + db[:, None, None] * IX)
    w, v = kernels.eigh_batch(h)
    elems = np.abs(np.conj(np.swapaxes(v, 1, 2)) @ dh @ v)
    gaps2 = (w[:, :, None] - w[:, None, :]) ** 2
    norm = np.sqrt(np.sum(np.abs(dh) ** 2, axis=(1, 2)))
    offdiag = ~np.eye(3, dtype=bool)[None]
    usable = offdiag & (elems > 1e-12 * norm[:, None, None])
    if not np.any(usable):
        return np.inf
    ratio = np.where(usable, gaps2 / np.where(usable, elems, 1.0), np.inf)
    return float(ratio.min())


def adiabaticity_factor(schedule, grid_points=10001, rtol=1e-3, max_doublings=6):
    """Minimum over time and level pairs of ``gap**2 / |<m|dH/dt|n>|``.

    Diagonal pairs are excluded and pairs whose matrix element vanishes are
    skipped. The grid is refined by doubling until the minimum moves by less
    than ``rtol`` (relative).
    """
    if grid_points < 100:
        raise ValueError(f"grid_points must be >= 100, got {grid_points}")
    n = grid_points
    value = _factor_on_grid(schedule, n)
    for _ in range(max_doublings):
        n = 2 * n - 1
        refined = _factor_on_grid(schedule, n)
        if refined == value or abs(refined - value) <= rtol * abs(refined):
            return refined
        value = refined
    return value
