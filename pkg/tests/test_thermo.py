import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qutrit_je import thermo
from qutrit_je.core import gibbs_state, is_density_matrix
from qutrit_je.protocol import DEFAULT_LAMBDA, Schedule, h_of_t

from conftest import LAM


def closed_form_ratio(x):
    return (1 + 2 * np.cosh(0.75 * x)) / (1 + 2 * np.cosh(x))


@pytest.fixture(scope="module")
def tpm200():
    return thermo.ideal_tpm(Schedule.from_microseconds(200), 0.5 / LAM)


def test_conditional_doubly_stochastic(tpm200):
    _, cond, _, _ = tpm200
    np.testing.assert_allclose(cond.sum(axis=0), 1.0, atol=1e-10)
    np.testing.assert_allclose(cond.sum(axis=1), 1.0, atol=1e-10)
    assert np.all(cond > 0)


def test_work_values(tpm200):
    _, _, h0, htau = tpm200
    w = thermo.work_values(h0, htau)
    lam = DEFAULT_LAMBDA
    np.testing.assert_allclose(w[0, 0], 0.75 * lam - lam)
    np.testing.assert_allclose(w[2, 0], -0.75 * lam - lam)


def test_work_distribution_atoms(tpm200):
    p0, cond, h0, htau = tpm200
    dist = thermo.work_distribution(p0, cond, h0, htau)
    assert len(dist.atoms) == 9
    assert np.all(np.diff(dist.values) > 0)
    assert np.isclose(dist.probabilities.sum(), 1.0)
    assert all(len(a.labels) == 1 for a in dist.atoms)


def test_work_distribution_merges_degenerate_values():
    h = np.diag([1.0, 0.0, -1.0])
    dist = thermo.work_distribution([1 / 3] * 3, np.eye(3), h, h)
    np.testing.assert_allclose(dist.values, [-2, -1, 0, 1, 2])
    zero = dist.atoms[2]
    assert np.isclose(zero.probability, 1.0)
    assert sorted(zero.labels) == [(-1, -1), (0, 0), (1, 1)]


def test_work_distribution_validates():
    h = np.diag([1.0, 0.0, -1.0])
    with pytest.raises(ValueError):
        thermo.work_distribution([0.5, 0.6, 0.1], np.eye(3), h, h)


@pytest.mark.parametrize("x", [0.0, 0.5, 0.7, 1.3])
def test_free_energy_ratio_closed_form(x):
    s = Schedule.from_microseconds(200)
    r = thermo.free_energy_ratio(h_of_t(0, s), h_of_t(s.tau, s), x / LAM)
    assert np.isclose(r, closed_form_ratio(x), rtol=1e-13)


def test_free_energy_ratio_rejects_negative_beta():
    with pytest.raises(ValueError):
        thermo.free_energy_ratio(np.eye(3), np.eye(3), -1.0)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.0, 2.0), tau_us=st.floats(1.0, 5000.0))
def test_je_identity(x, tau_us):
    check = thermo.je_check(Schedule.from_microseconds(tau_us), x / LAM, 4000)
    assert abs(check.difference) < 1e-8


def test_je_positive_lambda():
    check = thermo.je_check(Schedule.from_microseconds(200, lam=LAM), 0.7 / LAM)
    assert abs(check.difference) < 1e-8


def test_prep_angles():
    a = thermo.prep_angles(0.5 / LAM, DEFAULT_LAMBDA)
    x = -0.5
    assert np.isclose(np.cos(a.theta / 2) ** 2, np.exp(-x) / (1 + 2 * np.cosh(x)))
    assert np.isclose(np.cos(a.theta_prime / 2) ** 2, 1 / (1 + np.exp(-x)))
    # quoted 1.5584 and 1.8178 agree with the formulas to rounding
    assert abs(a.theta - 1.5584) < 1e-3 and abs(a.theta_prime - 1.8178) < 1e-3


def test_pair_rotation():
    r = thermo.pair_rotation(np.pi / 2, +1, 0)
    np.testing.assert_allclose(r @ [1, 0, 0], [np.sqrt(0.5), np.sqrt(0.5), 0])
    np.testing.assert_allclose(r.conj().T @ r, np.eye(3), atol=1e-15)


@pytest.mark.parametrize("x", [0.0, 0.5, 0.7, 2.0])
def test_coherent_gibbs_prep(x):
    s = Schedule.from_microseconds(200)
    beta = x / LAM
    _, psi, rho = thermo.coherent_gibbs_prep(beta, s)
    assert np.isclose(np.linalg.norm(psi), 1.0)
    assert is_density_matrix(rho)
    np.testing.assert_allclose(rho, gibbs_state(h_of_t(0, s), beta), atol=1e-12)


def test_thermal_populations():
    p = thermo.thermal_populations(Schedule(1e-4), 0.5 / LAM)
    np.testing.assert_allclose(p, [0.5065, 0.3072, 0.1863], atol=1e-4)


def test_ideal_joint_sums_to_one():
    j = thermo.ideal_joint(Schedule.from_microseconds(50), 0.7 / LAM, 4000)
    assert np.isclose(j.sum(), 1.0)
    np.testing.assert_allclose(j.sum(axis=0), thermo.thermal_populations(Schedule(1e-4), 0.7 / LAM))
