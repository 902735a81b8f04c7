import numpy as np
import pytest

from iontomo import qmath

ACCEPTANCE_LINES: list[str] = []


def haar_unitary(rng) -> np.ndarray:
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    u = np.array([[w - 1j * z, -1j * x - y], [-1j * x + y, w + 1j * z]])
    return np.exp(1j * rng.uniform(0, 2 * np.pi)) * u


def assert_same_gate(u, v, tol=1e-12):
    assert qmath.infidelity(u, v) <= tol


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
