import numpy as np
import pytest

from qutrit_je import kernels
from qutrit_je.protocol import DEFAULT_LAMBDA

LAM = abs(DEFAULT_LAMBDA)


@pytest.fixture(params=kernels.available_backends())
def each_backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    mod = kernels.load_backend(request.param)
    for name in ("eigh_batch", "propagate_coeffs", "evolve_coeffs"):
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


def random_hermitian(rng, scale=1.0):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    return scale * (a + a.conj().T) / 2


# one PASS/FAIL line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE = {}


def record(criterion, ok, detail):
    prev = ACCEPTANCE.get(criterion)
    ok = bool(ok) and (prev is None or prev[0])
    detail = detail if prev is None else f"{prev[1]}; {detail}"
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
