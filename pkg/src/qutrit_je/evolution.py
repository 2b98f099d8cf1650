"""Time-ordered propagation of switching schedules.

The propagator is the midpoint-rule product of exact step exponentials,
later steps applied on the left. Every factor is exactly unitary, and the
scheme is second order in the step size.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import level_index, unitarity_defect
from .protocol import IX, IZ, coefficients, spin_labels

DEFAULT_STEPS = 20_000


@dataclass(frozen=True)
class PropagationResult:
    unitary: np.ndarray
    step_count: int
    unitarity_defect: float


@dataclass(frozen=True)
class OverlapTrace:
    """Populations of the instantaneous eigenstates, columns ordered (+1, 0, -1)."""

    times: np.ndarray
    overlaps: np.ndarray


def _even(n):
    if n < 1:
        raise ValueError(f"n_steps must be >= 1, got {n}")
    return n + (n % 2)


def _midpoint_coefficients(schedule, n_steps, t_start, t_end):
    dt = (t_end - t_start) / n_steps
    t_mid = t_start + (np.arange(n_steps) + 0.5) * dt
    return coefficients(t_mid, schedule), dt


def propagate(schedule, n_steps=DEFAULT_STEPS, t_start=0.0, t_end=None):
    """Propagator of ``H(t)`` from ``t_start`` to ``t_end`` (default: the full switch).

    ``n_steps`` is rounded up to an even number so that the ramp kink at
    ``tau/2`` falls on a step boundary of the full-interval grid.
    """
    t_end = schedule.tau if t_end is None else t_end
    if not 0.0 <= t_start <= t_end <= schedule.tau:
        raise ValueError(f"need 0 <= t_start <= t_end <= tau, got [{t_start}, {t_end}]")
    n = _even(n_steps)
    (alpha, beta, gamma), dt = _midpoint_coefficients(schedule, n, t_start, t_end)
    u = kernels.propagate_coeffs(alpha, beta, gamma, dt)
    return PropagationResult(u, n, unitarity_defect(u))


def propagate_converged(schedule, n_steps=DEFAULT_STEPS, tol=1e-8, max_doublings=8):
    """Double the step count until the propagator changes by less than ``tol`` (max-norm)."""
    prev = propagate(schedule, n_steps)
    for _ in range(max_doublings):
        nxt = propagate(schedule, 2 * prev.step_count)
        if np.max(np.abs(nxt.unitary - prev.unitary)) < tol:
            return nxt
        prev = nxt
    return prev


def overlap_trace(schedule, initial_index, n_steps=DEFAULT_STEPS):
    """Evolve an eigenstate of ``H(0)`` and record its instantaneous-eigenstate populations.

    ``initial_index`` is the spin label (+1, 0 or -1) of the starting
    eigenstate. Overlaps are taken on the step grid ``t_k = k * tau / n``.
    """
    level_index(initial_index)
    n = _even(n_steps)
    (alpha, beta, gamma), dt = _midpoint_coefficients(schedule, n, 0.0, schedule.tau)
    times = np.linspace(0.0, schedule.tau, n + 1)
    ga, gb, _ = coefficients(times, schedule)
    w, v = kernels.eigh_batch(ga[:, None, None] * IZ + gb[:, None, None] * IX)
    labels = spin_labels(schedule)
    # reorder eigenvector columns from ascending energy into (+1, 0, -1)
    order = [labels.index(level) for level in (+1, 0, -1)]
    v = v[:, :, order]
    psi0 = v[0, :, level_index(initial_index)]
    states = kernels.evolve_coeffs(alpha, beta, gamma, dt, psi0)
    amps = np.einsum("tij,ti->tj", np.conj(v), states)
    return OverlapTrace(times, np.abs(amps) ** 2)
