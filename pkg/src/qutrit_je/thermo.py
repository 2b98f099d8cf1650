"""Two-point-measurement work statistics and the Jarzynski identity.

Conditional matrices are indexed ``[m, n]`` with ``n`` the initial and ``m``
the final energy eigenstate, both in ascending-energy order. Along the
default protocol (``lam < 0``) that order coincides with the spin labels
``(+1, 0, -1)``.
"""
from dataclasses import dataclass, field

import numpy as np

from .core import (
    boltzmann_weights,
    dephase_pair,
    eigh,
    level_index,
    log_partition,
)
from .evolution import DEFAULT_STEPS, propagate
from .protocol import h_of_t, spin_labels

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class WorkAtom:
    w: float
    probability: float
    labels: tuple = field(default_factory=tuple)


@dataclass(frozen=True)
class WorkDistribution:
    """Point masses of the work distribution, sorted by work value (rad/s)."""

    atoms: tuple

    @property
    def values(self):
        return np.array([a.w for a in self.atoms])

    @property
    def probabilities(self):
        return np.array([a.probability for a in self.atoms])

    def mean(self):
        return float(np.dot(self.values, self.probabilities))


@dataclass(frozen=True)
class PrepAngles:
    theta: float
    theta_prime: float


@dataclass(frozen=True)
class JECheck:
    lhs: float
    rhs: float

    @property
    def difference(self):
        return self.lhs - self.rhs


def tpm_conditional(u, h0, htau):
    """``P[m, n] = |<m(tau)| U |n(0)>|**2`` in the eigenbases of ``h0`` and ``htau``."""
    v0 = eigh(h0).vectors
    vt = eigh(htau).vectors
    return np.abs(vt.conj().T @ np.asarray(u) @ v0) ** 2


def work_values(h0, htau):
    """``W[m, n] = eps_m(tau) - eps_n(0)``."""
    return eigh(htau).values[:, None] - eigh(h0).values[None, :]


def _check_probabilities(p, name):
    p = np.asarray(p, dtype=float)
    if p.shape != (3,) or np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} must be 3 non-negative probabilities summing to 1, got {p}")
    return p


def work_distribution(p0, cond, h0, htau, labels=(+1, 0, -1)):
    """Merge ``P_n * P[m|n]`` into atoms at ``W[m, n]``.

    Atoms whose work values agree within 1e-12 rad/s are merged; each atom
    keeps the list of ``(n, m)`` label pairs that contributed.
    """
    p0 = _check_probabilities(p0, "p0")
    cond = np.asarray(cond, dtype=float)
    w = work_values(h0, htau)
    entries = sorted(
        (w[m, n], p0[n] * cond[m, n], (labels[n], labels[m]))
        for n in range(3)
        for m in range(3)
    )
    atoms = []
    for value, prob, pair in entries:
        if atoms and abs(value - atoms[-1][0]) <= MERGE_TOL:
            atoms[-1][1] += prob
            atoms[-1][2].append(pair)
        else:
            atoms.append([value, prob, [pair]])
    return WorkDistribution(tuple(WorkAtom(v, p, tuple(ls)) for v, p, ls in atoms))


def jarzynski_lhs(dist, beta):
    """``<exp(-beta W)>`` over the distribution."""
    if beta == 0:
        return float(dist.probabilities.sum())
    return float(np.dot(dist.probabilities, np.exp(-beta * dist.values)))


def free_energy_ratio(h0, htau, beta):
    """``exp(-beta dF) = Z(tau) / Z(0)``."""
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    return float(np.exp(log_partition(eigh(htau).values, beta) - log_partition(eigh(h0).values, beta)))


def thermal_populations(schedule, beta):
    """Gibbs populations of ``H(0)`` in ascending-energy order."""
    return boltzmann_weights(eigh(h_of_t(0.0, schedule)).values, beta)


def prep_angles(beta, lam):
    """Rotation angles of the coherent-Gibbs preparation."""
    x = beta * lam
    theta = 2.0 * np.arccos(np.sqrt(np.exp(-x) / (1.0 + 2.0 * np.cosh(x))))
    theta_prime = 2.0 * np.arccos(np.sqrt(1.0 / (1.0 + np.exp(-x))))
    return PrepAngles(float(theta), float(theta_prime))


def pair_rotation(angle, first, second):
    """``exp(-i angle/2 sigma_y)`` acting on the ordered level pair ``(first, second)``.

    Maps ``|first>`` to ``cos(angle/2)|first> + sin(angle/2)|second>``.
    """
    p, q = level_index(first), level_index(second)
    r = np.eye(3, dtype=np.complex128)
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    r[p, p] = r[q, q] = c
    r[p, q] = -s
    r[q, p] = s
    return r


def coherent_gibbs_prep(beta, schedule):
    """Coherent Gibbs state of ``H(0)`` and its two-stage dephased counterpart.

    Starting from ``|+1>``, the first rotation leaves ``cos(theta/2)`` on
    ``|+1>``. The second rotation's angle ``theta'`` has ``cos**2(theta'/2)``
    equal to the ``|-1>`` share of the remaining ``|0>, |-1>`` population, so it
    is applied as a pair rotation by ``pi - theta'`` from ``|0>`` towards ``|-1>``.
    Returns ``(angles, psi, rho)`` where ``rho`` is ``|psi><psi|`` after
    removing the ``+1`` coherences and then the ``-1`` coherences.
    """
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    angles = prep_angles(beta, schedule.lam)
    psi = np.zeros(3, dtype=np.complex128)
    psi[level_index(+1)] = 1.0
    psi = pair_rotation(angles.theta, +1, 0) @ psi
    psi = pair_rotation(np.pi - angles.theta_prime, 0, -1) @ psi
    rho = np.outer(psi, psi.conj())
    rho = dephase_pair(dephase_pair(rho, +1), -1)
    return angles, psi, rho


def ideal_tpm(schedule, beta, n_steps=DEFAULT_STEPS):
    """``(p0, cond, h0, htau)`` for an ideal two-point measurement of the schedule."""
    h0 = h_of_t(0.0, schedule)
    htau = h_of_t(schedule.tau, schedule)
    u = propagate(schedule, n_steps).unitary
    return thermal_populations(schedule, beta), tpm_conditional(u, h0, htau), h0, htau


def ideal_joint(schedule, beta, n_steps=DEFAULT_STEPS):
    """Joint probabilities ``P[m, n] = P_n * P[m|n]`` of the ideal protocol."""
    p0, cond, _, _ = ideal_tpm(schedule, beta, n_steps)
    return cond * p0[None, :]


def je_check(schedule, beta, n_steps=DEFAULT_STEPS):
    """Compare ``<exp(-beta W)>`` from ideal TPM statistics with ``Z(tau)/Z(0)``."""
    p0, cond, h0, htau = ideal_tpm(schedule, beta, n_steps)
    dist = work_distribution(p0, cond, h0, htau, spin_labels(schedule))
    return JECheck(jarzynski_lhs(dist, beta), free_energy_ratio(h0, htau, beta))
