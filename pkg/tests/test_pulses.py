import numpy as np
import pytest

from qutrit_je import pulses
from qutrit_je.core import NumericalGuardError, hermiticity_defect
from qutrit_je.protocol import DEFAULT_LAMBDA, Schedule

S200 = Schedule.from_microseconds(200)


@pytest.fixture(scope="module")
def p100():
    return pulses.params_for_ratio(S200, 100)


def test_h0_at_start(p100):
    iz = np.diag([1.0, 0.0, -1.0])
    h0 = p100.p_scaled * iz @ iz + p100.omega_n_scaled * iz
    np.testing.assert_array_equal(pulses.lab_hamiltonian(0.0, p100), h0)


def test_lab_hamiltonian_hermitian(p100):
    for t in np.random.default_rng(0).uniform(0, S200.tau, 1000):
        assert hermiticity_defect(pulses.lab_hamiltonian(t, p100)) == 0.0
    with pytest.raises(ValueError):
        pulses.lab_hamiltonian(2 * S200.tau, p100)


def test_carriers_at_start(p100):
    w1, w2 = p100.carriers(0.0)
    p, w = p100.p_scaled, p100.omega_n_scaled
    assert np.isclose(w1[0], p + w - DEFAULT_LAMBDA)
    assert np.isclose(w2[0], p - w + DEFAULT_LAMBDA)


def test_carrier_ratio(p100):
    assert np.isclose(p100.carrier_ratio, 100)
    default = pulses.LabFrameParams(S200)
    assert np.isclose(default.p_scaled, 0.1 * pulses.NV_P)


def test_rwa_guard():
    with pytest.raises(NumericalGuardError, match="carrier_scale"):
        pulses.params_for_ratio(S200, 5)
    with pytest.raises(ValueError):
        pulses.LabFrameParams(S200, carrier_scale=0.0)


def test_rotating_transform(p100):
    np.testing.assert_array_equal(pulses.rotating_transform(0.0, p100), np.eye(3))
    tau = S200.tau
    for t in np.linspace(0, tau, 7):
        u = pulses.rotating_transform(t, p100)
        assert np.allclose(u, np.diag(np.diag(u)))
        np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-14)
        p, w = p100.p_scaled, p100.omega_n_scaled
        phase = (p + w) * t - DEFAULT_LAMBDA * (t - t**2 / (8 * tau))
        assert np.isclose(u[0, 0], np.exp(1j * phase))


def test_step_guard(p100):
    need = pulses.min_steps(p100)
    with pytest.raises(NumericalGuardError, match=str(need)):
        pulses.rwa_fidelity(p100, need - 1)


def test_b_off_exact():
    p = pulses.params_for_ratio(Schedule.from_microseconds(200, b_ramp="off"), 100)
    assert pulses.rwa_fidelity(p).fidelity > 1 - 1e-9


def test_fidelity_converged_and_unitary(p100):
    a = pulses.rwa_fidelity(p100, 200_000)
    b = pulses.rwa_fidelity(p100, 400_000)
    assert abs(a.fidelity - b.fidelity) < 1e-6
    assert b.unitarity_defect < 1e-8
    assert a.fidelity >= 0.999


def test_monotone_in_ratio():
    f = [pulses.rwa_fidelity(pulses.params_for_ratio(S200, r)).fidelity for r in (100, 50, 25)]
    assert f[0] > f[1] > f[2]
