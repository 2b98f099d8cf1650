import numpy as np
import pytest

from qutrit_je import evolution
from qutrit_je.core import spin1_operator
from qutrit_je.protocol import DEFAULT_LAMBDA, Schedule
from qutrit_je.thermo import tpm_conditional
from qutrit_je.protocol import h_of_t


def test_step_count_even_and_unitary(each_backend):
    r = evolution.propagate(Schedule.from_microseconds(200), 1001)
    assert r.step_count == 1002
    assert r.unitarity_defect < 1e-12


def test_interval_validation():
    s = Schedule(1e-4)
    with pytest.raises(ValueError):
        evolution.propagate(s, 10, t_start=0.5e-4, t_end=0.2e-4)
    with pytest.raises(ValueError):
        evolution.propagate(s, 0)


def test_composition(each_backend):
    s = Schedule.from_microseconds(200)
    full = evolution.propagate(s, 40000).unitary
    first = evolution.propagate(s, 20000, 0.0, s.tau / 2).unitary
    second = evolution.propagate(s, 20000, s.tau / 2, s.tau).unitary
    np.testing.assert_allclose(second @ first, full, atol=1e-12)


def test_diagonal_protocol_is_exact(each_backend):
    s = Schedule.from_microseconds(100, b_ramp="off")
    u = evolution.propagate(s, 10).unitary
    phase = DEFAULT_LAMBDA * (s.tau - s.tau**2 / (8 * s.tau))
    np.testing.assert_allclose(u, np.diag(np.exp(-1j * phase * np.array([1, 0, -1]))), atol=1e-12)


def test_second_order_convergence(each_backend):
    s = Schedule.from_microseconds(50)
    ref = evolution.propagate(s, 64000).unitary
    e1 = np.abs(evolution.propagate(s, 500).unitary - ref).max()
    e2 = np.abs(evolution.propagate(s, 1000).unitary - ref).max()
    assert 3.0 < e1 / e2 < 5.0


def test_propagate_converged():
    s = Schedule.from_microseconds(200)
    r = evolution.propagate_converged(s, 2000, tol=1e-9)
    ref = evolution.propagate(s, 4 * r.step_count).unitary
    assert np.abs(r.unitary - ref).max() < 1e-8


def test_overlap_trace_rows_normalized(each_backend):
    tr = evolution.overlap_trace(Schedule.from_microseconds(50), 0, 2000)
    assert tr.overlaps.shape == (2001, 3)
    np.testing.assert_allclose(tr.overlaps.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(tr.overlaps[0], [0, 1, 0], atol=1e-14)


def test_overlap_endpoint_matches_conditional():
    s = Schedule.from_microseconds(200)
    cond = tpm_conditional(evolution.propagate(s, 20000).unitary, h_of_t(0, s), h_of_t(s.tau, s))
    for k, label in enumerate((+1, 0, -1)):
        tr = evolution.overlap_trace(s, label, 20000)
        np.testing.assert_allclose(tr.overlaps[-1], cond[:, k], atol=1e-10)


def test_overlap_positive_lambda_labels():
    s = Schedule.from_microseconds(2500, lam=abs(DEFAULT_LAMBDA))
    tr = evolution.overlap_trace(s, -1, 20000)
    assert tr.overlaps[-1, 2] > 0.99


def test_sudden_limit_keeps_state():
    tr = evolution.overlap_trace(Schedule.from_microseconds(5), +1, 2000)
    assert tr.overlaps[-1, 0] > 0.99
    assert tr.overlaps[:, 0].min() < 0.7
