"""Lab-frame RF engineering of the switching Hamiltonian.

The nuclear spin sits in ``H0 = P I_z**2 + omega_n I_z`` and is driven by two
detuned tones along ``I_x``, one near each allowed transition. In the frame
``V(t) = exp(-i int_0^t (lam a(s) I_z - H0) ds)`` the resonant parts of the
drive, after the rotating-wave approximation, reproduce
``lam (a(t) I_z + b(t) I_x)``.

Frequencies are in rad/s. ``carrier_scale`` multiplies ``P`` and ``omega_n``
so that long switches stay cheap to integrate; the validity guard requires
both carriers to stay at least ``RWA_GUARD * |lam|`` away from zero.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import NumericalGuardError, check_hermitian, spin1_operator, unitarity_defect
from .evolution import propagate
from .protocol import Schedule, ramp_arrays

NV_P = -2.0 * np.pi * 4.95e6
NV_OMEGA_N = 2.0 * np.pi * 2.277e6
RWA_GUARD = 20.0
SAMPLES_PER_PERIOD = 20
DEFAULT_STEPS = 100_000

_IZ = spin1_operator("z")
_IX = spin1_operator("x")


@dataclass(frozen=True)
class LabFrameParams:
    """Unscaled ``P`` and ``omega_n`` plus the scale applied before simulation."""

    schedule: Schedule
    P: float = NV_P
    omega_n: float = NV_OMEGA_N
    carrier_scale: float = 0.1

    def __post_init__(self):
        if not self.carrier_scale > 0:
            raise ValueError(f"carrier_scale must be positive, got {self.carrier_scale}")
        lam = abs(self.schedule.lam)
        need = RWA_GUARD * lam
        if self.min_carrier < need:
            raise NumericalGuardError(
                f"minimum carrier {self.min_carrier:.4g} rad/s is below {RWA_GUARD:g}*|lam| = "
                f"{need:.4g} rad/s; raise carrier_scale to at least {self.carrier_scale * need / self.min_carrier:.4g}"
            )

    @property
    def p_scaled(self):
        return self.P * self.carrier_scale

    @property
    def omega_n_scaled(self):
        return self.omega_n * self.carrier_scale

    def carriers(self, t):
        """``(omega_1, omega_2)`` at times ``t``."""
        a = ramp_arrays(t, self.schedule)[0]
        lam = self.schedule.lam
        p, w = self.p_scaled, self.omega_n_scaled
        return p + w - lam * a, p - w + lam * a

    @property
    def min_carrier(self):
        # carriers are linear in a, so the extremes sit at the ramp end points
        t = np.array([0.0, self.schedule.tau])
        w1, w2 = self.carriers(t)
        return float(min(np.abs(w1).min(), np.abs(w2).min()))

    @property
    def max_carrier(self):
        t = np.array([0.0, self.schedule.tau])
        w1, w2 = self.carriers(t)
        return float(max(np.abs(w1).max(), np.abs(w2).max()))

    @property
    def carrier_ratio(self):
        """Bare carrier separation ``min(|P+omega_n|, |P-omega_n|) / |lam|`` after scaling."""
        p, w = self.p_scaled, self.omega_n_scaled
        return min(abs(p + w), abs(p - w)) / abs(self.schedule.lam)


def params_for_ratio(schedule, ratio, P=NV_P, omega_n=NV_OMEGA_N):
    """Lab-frame parameters whose scaled bare carriers sit at ``ratio * |lam|``."""
    scale = ratio * abs(schedule.lam) / min(abs(P + omega_n), abs(P - omega_n))
    return LabFrameParams(schedule, P, omega_n, scale)


def _drive(t, params):
    """``H0`` coefficients and the ``I_x`` drive amplitude at times ``t``.

    The tone phases are the accumulated integrals of the carriers; with the
    linear ``a``-ramp these have the closed form ``int a = t - t**2/(8 tau)``.
    Each tone contributes ``2 pi sqrt(2) * 2 Omega cos(phase)`` with
    ``Omega = lam b / (2 sqrt(2) pi)``, so after the RWA each keeps
    ``lam b / sqrt(2)`` on its transition, the ``I_x`` matrix element.
    """
    _, b, _, _, a_int = ramp_arrays(t, params.schedule)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lam = params.schedule.lam
    p, w = params.p_scaled, params.omega_n_scaled
    phase1 = (p + w) * t - lam * a_int
    phase2 = (p - w) * t + lam * a_int
    omega = lam * b / (2.0 * np.sqrt(2.0) * np.pi)
    c = 2.0 * np.pi * np.sqrt(2.0) * 2.0 * omega * (np.cos(phase1) + np.cos(phase2))
    return c


def lab_hamiltonian(t, params):
    """``H0 + c(t) I_x`` at a single time ``t`` in ``[0, tau]``."""
    c = float(_drive(t, params)[0])
    h = params.p_scaled * _IZ @ _IZ + params.omega_n_scaled * _IZ + c * _IX
    return check_hermitian(h, "lab Hamiltonian")


def rotating_transform(t, params):
    """Diagonal frame unitary ``exp(-i int_0^t (lam a I_z - H0) ds)``.

    The ``|+1>`` entry is ``exp(i[(P + omega_n) t - lam (t - t**2/(8 tau))])``
    for the linear ramp (scaled ``P``, ``omega_n``).
    """
    a_int = ramp_arrays(t, params.schedule)[4][0]
    t = float(t)
    lam = params.schedule.lam
    p, w = params.p_scaled, params.omega_n_scaled
    # int (lam a Iz - H0) on the diagonal (+1, 0, -1)
    g = np.array([lam * a_int - (p + w) * t, 0.0, -lam * a_int - (p - w) * t])
    return np.diag(np.exp(-1j * g))


def min_steps(params):
    """Smallest step count resolving the fastest carrier with ``SAMPLES_PER_PERIOD`` samples."""
    fastest = max(params.max_carrier, abs(params.p_scaled) + abs(params.omega_n_scaled))
    periods = params.schedule.tau * fastest / (2.0 * np.pi)
    return int(np.ceil(SAMPLES_PER_PERIOD * periods))


@dataclass(frozen=True)
class RwaResult:
    fidelity: float
    engineered: np.ndarray
    target: np.ndarray
    step_count: int
    unitarity_defect: float


def engineered_propagator(params, n_steps):
    """``V(tau) U_lab(tau)`` from a midpoint product over ``n_steps`` steps."""
    need = min_steps(params)
    if n_steps < need:
        raise NumericalGuardError(
            f"n_steps={n_steps} under-resolves the carriers; need at least {need}"
        )
    n = n_steps + (n_steps % 2)
    tau = params.schedule.tau
    dt = tau / n
    t_mid = (np.arange(n) + 0.5) * dt
    c = _drive(t_mid, params)
    alpha = np.full(n, params.omega_n_scaled)
    gamma = np.full(n, params.p_scaled)
    u_lab = kernels.propagate_coeffs(alpha, c, gamma, dt)
    return rotating_transform(tau, params) @ u_lab, n


def rwa_fidelity(params, n_steps=None, target_steps=20000):
    """Gate fidelity ``|Tr(U_target^dagger U_eng)| / 3`` against the switching propagator."""
    if n_steps is None:
        n_steps = max(DEFAULT_STEPS, 10 * min_steps(params))
    n_steps = int(n_steps)
    u_eng, n = engineered_propagator(params, n_steps)
    u_target = propagate(params.schedule, target_steps).unitary
    fid = abs(np.trace(u_target.conj().T @ u_eng)) / 3.0
    return RwaResult(float(fid), u_eng, u_target, n, unitarity_defect(u_eng))
