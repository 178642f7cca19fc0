import numpy as np
import pytest
from scipy.integrate import solve_ivp

from floquetpi.model import NLevelSystem, eval_field

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)

# lines appended by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rabi_system():
    return NLevelSystem([0.0, 1.0], SIGMA_X)


def random_hermitian(rng, n, scale=1.0, diagonal=True):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = 0.5 * scale * (a + a.conj().T)
    if not diagonal:
        np.fill_diagonal(h, 0.0)
    return h


def ode_propagator(system, pulse, t0, t1, rtol=1e-12):
    """Independent oracle: column-wise adaptive Runge-Kutta (DOP853)."""
    n = system.n_levels
    h0 = np.diag(system.energies).astype(complex)
    mu = np.asarray(system.dipole)
    pts = [t for t in pulse.breakpoints() if t0 < t < t1]
    edges = [t0, *pts, t1]

    def rhs(t, y):
        return -1j * ((h0 - mu * eval_field(pulse, t)) @ y.reshape(n, n)).ravel()

    u = np.eye(n, dtype=complex)
    for a, b in zip(edges[:-1], edges[1:]):
        # integrate each smooth piece separately; the field may jump at a and b
        sol = solve_ivp(rhs, (a, b), u.ravel(), method="DOP853", rtol=rtol, atol=rtol * 1e-2)
        u = sol.y[:, -1].reshape(n, n)
    return u
