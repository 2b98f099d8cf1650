import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from qutrit_je import core
from qutrit_je.core import spin1_operator

from conftest import random_hermitian


def test_spin_algebra():
    x, y, z = (spin1_operator(a) for a in "xyz")
    np.testing.assert_allclose(x @ y - y @ x, 1j * z, atol=1e-15)
    np.testing.assert_allclose(y @ z - z @ y, 1j * x, atol=1e-15)
    np.testing.assert_allclose(x @ x + y @ y + z @ z, 2 * np.eye(3), atol=1e-15)
    with pytest.raises(ValueError):
        spin1_operator("w")


def test_level_index():
    assert [core.level_index(x) for x in (+1, 0, -1)] == [0, 1, 2]
    with pytest.raises(ValueError):
        core.level_index(2)


def test_check_hermitian_rejects():
    with pytest.raises(ValueError):
        core.eigh(np.array([[0, 1], [1, 0]]))
    bad = np.zeros((3, 3), complex)
    bad[0, 1] = 1.0
    with pytest.raises(ValueError, match="not Hermitian"):
        core.eigh(bad)


def test_eigensystem_helpers():
    es = core.eigh(np.diag([1.0, 0.0, -1.0]))
    np.testing.assert_allclose(es.values, [-1, 0, 1])
    np.testing.assert_allclose(np.abs(es.state(0)), [0, 0, 1])
    np.testing.assert_allclose(es.projector(2), np.diag([1.0, 0, 0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 10.0))
def test_expm_matches_scipy(seed, dt):
    h = random_hermitian(np.random.default_rng(seed))
    np.testing.assert_allclose(core.expm_minus_iH_dt(h, dt), expm(-1j * h * dt), atol=1e-11)


def test_expm_negative_dt():
    with pytest.raises(ValueError):
        core.expm_minus_iH_dt(np.eye(3), -1.0)


def test_gibbs_state():
    h = np.diag([1.0, 0.0, -1.0]).astype(complex)
    rho = core.gibbs_state(h, 0.5)
    z = 1 + 2 * np.cosh(0.5)
    np.testing.assert_allclose(np.diag(rho).real, np.exp(-0.5 * np.array([1, 0, -1])) / z)
    assert core.is_density_matrix(rho)
    np.testing.assert_allclose(core.gibbs_state(h, 0.0), np.eye(3) / 3)
    with pytest.raises(ValueError):
        core.gibbs_state(h, -1.0)


def test_boltzmann_extreme_beta_is_stable():
    p = core.boltzmann_weights([0.0, 1e6, 2e6], 1.0)
    np.testing.assert_allclose(p, [1.0, 0.0, 0.0])
    assert np.isclose(core.log_partition([0.0, 1e6, 2e6], 1.0), 0.0)


def test_dephase_pair():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=3) + 1j * rng.normal(size=3)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    out = core.dephase_pair(rho, +1)
    assert out[0, 1] == 0 and out[0, 2] == 0 and out[1, 0] == 0
    np.testing.assert_allclose(out[1, 2], rho[1, 2])
    np.testing.assert_allclose(np.diag(out), np.diag(rho))
    np.testing.assert_allclose(core.dephase_pair(out, +1), out)
    assert core.is_density_matrix(out)
    with pytest.raises(ValueError):
        core.dephase_pair(rho, 0)


def test_is_density_matrix_rejects():
    assert not core.is_density_matrix(np.diag([1.5, -0.5, 0.0]))
    assert not core.is_density_matrix(np.eye(3))
