import numpy as np
import pytest

from qutrit_je import protocol
from qutrit_je.protocol import DEFAULT_LAMBDA, Schedule

from conftest import LAM


def test_default_lambda():
    assert np.isclose(DEFAULT_LAMBDA, -np.sqrt(2) * np.pi * 5000)


@pytest.mark.parametrize("kw", [{"tau": 0.0}, {"tau": -1.0}, {"tau": 1.0, "lam": 0.0},
                                {"tau": 1.0, "lam": np.inf}, {"tau": 1.0, "a_ramp": "cubic"},
                                {"tau": 1.0, "b_ramp": "sine"}])
def test_schedule_validation(kw):
    with pytest.raises(ValueError):
        Schedule(**kw)


def test_ramps_endpoints_and_kink():
    s = Schedule.from_microseconds(200)
    assert protocol.ramp(0.0, s) == (1.0, 0.0)
    a, b = protocol.ramp(s.tau, s)
    assert np.isclose(a, 0.75) and abs(b) < 1e-15
    assert protocol.ramp(s.tau / 2, s) == (0.875, 1.0)
    assert s.kink == s.tau / 2
    with pytest.raises(ValueError):
        protocol.ramp(1.1 * s.tau, s)


def test_endpoint_hamiltonians_diagonal():
    s = Schedule.from_microseconds(50)
    for t in (0.0, s.tau):
        h = protocol.h_of_t(t, s)
        assert np.allclose(h, np.diag(np.diag(h)), atol=1e-9)
    np.testing.assert_allclose(np.diag(protocol.h_of_t(0.0, s)).real, DEFAULT_LAMBDA * np.array([1, 0, -1]))


def test_dh_dt_matches_finite_difference_and_rejects_kink():
    s = Schedule.from_microseconds(100)
    t, eps = 0.3 * s.tau, 1e-4 * s.tau
    fd = (protocol.h_of_t(t + eps, s) - protocol.h_of_t(t - eps, s)) / (2 * eps)
    np.testing.assert_allclose(protocol.dh_dt(t, s), fd, rtol=1e-6, atol=1e-6)
    with pytest.raises(ValueError, match="kink"):
        protocol.dh_dt(s.tau / 2, s)


def test_alternative_ramps():
    s = Schedule.from_microseconds(10, a_ramp="constant", b_ramp="off")
    assert protocol.ramp(0.7 * s.tau, s) == (1.0, 0.0)
    assert s.kink is None
    assert protocol.adiabaticity_factor(s) == np.inf


def test_spin_labels():
    assert protocol.spin_labels(Schedule(1.0)) == (+1, 0, -1)
    assert protocol.spin_labels(Schedule(1.0, lam=5.0)) == (-1, 0, +1)


@pytest.mark.parametrize("tau_us, expected", [(5, 0.0441786), (200, 1.7671459), (2500, 22.0893233)])
def test_adiabaticity_closed_form(tau_us, expected):
    # min over time sits at t = tau with value sqrt(2) * 9/32 * |lam| * tau
    fa = protocol.adiabaticity_factor(Schedule.from_microseconds(tau_us))
    assert np.isclose(fa, np.sqrt(2) * 9 / 32 * LAM * tau_us * 1e-6, rtol=1e-9)
    assert np.isclose(fa, expected, rtol=1e-6)


def test_adiabaticity_grid_guard():
    with pytest.raises(ValueError):
        protocol.adiabaticity_factor(Schedule(1e-4), grid_points=10)
