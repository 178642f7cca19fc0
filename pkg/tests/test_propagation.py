import io

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from conftest import SIGMA_X, ode_propagator, random_hermitian
from floquetpi.errors import StepLimitExceeded
from floquetpi.model import NLevelSystem, PulseShape, rectangular, sampled, sin2
from floquetpi.propagation import (IntegratorConfig, global_phase_chi, hamiltonian_at,
                                   monodromy, propagate_state, propagator_over, step_grid,
                                   trace_integral)
from floquetpi.su2 import wrap_angle


def test_free_evolution_is_exact():
    s = NLevelSystem([0.0, 1.0, 2.5], np.ones((3, 3)))
    v = monodromy(s, rectangular(0.0, 1.0, 7.3)).entries
    np.testing.assert_allclose(v, np.diag(np.exp(-1j * np.array([0, 1, 2.5]) * 7.3)), atol=1e-13)


def test_static_field_matches_expm():
    rng = np.random.default_rng(1)
    s = NLevelSystem([0.0, 0.4, 1.1], random_hermitian(rng, 3))
    p = rectangular(0.8, 0.0, 3.0)
    expect = scipy.linalg.expm(-1j * hamiltonian_at(s, p, 1.0) * 3.0)
    np.testing.assert_allclose(monodromy(s, p).entries, expect, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_matches_runge_kutta_oracle(n):
    rng = np.random.default_rng(n)
    s = NLevelSystem(np.sort(rng.uniform(0, 2, n)), 0.5 * random_hermitian(rng, n))
    p = sin2(0.6, 1.3, 9.0, phase=0.2)
    v = monodromy(s, p, IntegratorConfig(tol=1e-12)).entries
    np.testing.assert_allclose(v, ode_propagator(s, p, 0.0, p.support), atol=1e-8)


def test_rectangular_jump_handled():
    s = NLevelSystem([0.0, 1.0], SIGMA_X)
    p = rectangular(0.4, 1.0, 6.0, phase=0.0)            # field jumps at both ends
    v = propagator_over(s, p, -1.0, 7.0, IntegratorConfig(tol=1e-12)).entries
    np.testing.assert_allclose(v, ode_propagator(s, p, -1.0, 7.0), atol=1e-8)


def test_unitarity_and_composition(rabi_system):
    p = sin2(0.3, 1.0, 20.0)
    v = monodromy(rabi_system, p)
    assert v.unitarity_error() < 1e-12
    a = propagator_over(rabi_system, p, 0.0, 7.77).entries
    b = propagator_over(rabi_system, p, 7.77, 20.0).entries
    np.testing.assert_allclose(b @ a, v.entries, atol=1e-8)


def test_zero_interval_and_order():
    s = NLevelSystem([0, 1], SIGMA_X)
    p = rectangular(1.0, 1.0, 1.0)
    np.testing.assert_array_equal(propagator_over(s, p, 0.5, 0.5).entries, np.eye(2))
    with pytest.raises(ValueError):
        propagator_over(s, p, 1.0, 0.5)
    with pytest.raises(ValueError):
        propagate_state(s, p, [1, 0], 1.0, 0.5)


def test_state_propagation_and_trajectory(rabi_system):
    p = sin2(0.3, 1.0, 10.0)
    psi0 = np.array([1, 1j]) / np.sqrt(2)
    psi, traj = propagate_state(rabi_system, p, psi0, 0.0, 10.0, trajectory=True)
    np.testing.assert_allclose(psi, monodromy(rabi_system, p).entries @ psi0, atol=1e-12)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[0] == 0.0 and traj.times[-1] == pytest.approx(10.0)
    np.testing.assert_allclose(traj.states[-1], psi)
    buf = io.StringIO()
    traj.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,re_psi0,re_psi1,im_psi0,im_psi1,pop0,pop1"
    assert len(lines) == len(traj.times) + 1


def test_zero_duration_trajectory(rabi_system):
    psi, traj = propagate_state(rabi_system, rectangular(1, 1, 0.0), [0, 1], 0.0, 0.0,
                                trajectory=True)
    assert len(traj.times) == 1
    np.testing.assert_array_equal(psi, [0, 1])


def test_step_limit(rabi_system):
    with pytest.raises(StepLimitExceeded):
        monodromy(rabi_system, sin2(1.0, 1.0, 50.0), IntegratorConfig(max_steps=100))


def test_tolerance_controls_error(rabi_system):
    p = sin2(0.5, 1.0, 12.0)
    ref = ode_propagator(rabi_system, p, 0.0, 12.0)
    errs = [np.max(np.abs(monodromy(rabi_system, p, IntegratorConfig(tol=t)).entries - ref))
            for t in (1e-6, 1e-9)]
    assert errs[1] < errs[0] / 10


def test_trace_integral_against_quad():
    s = NLevelSystem([0.0, 1.0], [[0.7, 0.2], [0.2, -0.1]])
    p = sampled([0, 1, -2, 0.5, 0], 4.0, amplitude=0.3, carrier=2.0, phase=0.1)
    grid = step_grid(s, p, 0.0, p.support)
    f = lambda t: np.trace(hamiltonian_at(s, p, t)).real
    pts = p.breakpoints()
    expect = sum(quad(f, a, b, epsabs=1e-14)[0] for a, b in zip(pts[:-1], pts[1:]))
    assert trace_integral(s, p, grid) == pytest.approx(expect, abs=1e-12)
    chi = global_phase_chi(s, p)
    det = np.linalg.det(monodromy(s, p).entries)
    assert abs(wrap_angle(np.angle(det) - 2 * chi)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3, 4]),
       st.sampled_from(["rectangular", "gaussian", "sin2"]))
def test_random_propagators_unitary(seed, n, kind):
    rng = np.random.default_rng(seed)
    s = NLevelSystem(np.sort(rng.uniform(0, 2, n)), 0.4 * random_hermitian(rng, n))
    p = PulseShape(kind, rng.uniform(0, 0.5), rng.uniform(0, 2), rng.uniform(0.5, 4),
                   rng.uniform(-3, 3))
    v = monodromy(s, p)
    assert v.unitarity_error() < 1e-10
