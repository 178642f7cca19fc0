from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from floquetpi.floquet import (assign_to_levels, floquet_spectrum, inversion_criterion, orbit,
                               rational_approx)
from floquetpi.model import NLevelSystem, rectangular
from floquetpi.propagation import monodromy
from floquetpi.su2 import Su2Params, compose_su2


def test_free_evolution_quasienergies():
    eps = np.array([0.0, 1.0, 2.3])
    T = 4.0
    s = NLevelSystem(eps, np.zeros((3, 3)))
    spec = floquet_spectrum(monodromy(s, rectangular(0.0, 1.0, T)).entries, T)
    omega0 = 2 * np.pi / T
    np.testing.assert_allclose(spec.quasienergies, np.mod(eps, omega0), atol=1e-12)
    np.testing.assert_allclose(np.abs(spec.theta), np.eye(3), atol=1e-12)


def test_identity_spectrum():
    spec = floquet_spectrum(np.eye(4), 2.0)
    np.testing.assert_array_equal(spec.quasienergies, np.zeros(4))
    np.testing.assert_allclose(spec.theta, np.eye(4), atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3, 5]), st.floats(0.5, 20.0))
def test_spectrum_against_eig(seed, n, T):
    v = unitary_group.rvs(n, random_state=seed)
    spec = floquet_spectrum(v, T)
    assert np.all((spec.quasienergies >= 0) & (spec.quasienergies < spec.omega0))
    np.testing.assert_allclose(spec.reconstruct(), v, atol=1e-10)
    np.testing.assert_allclose(spec.theta.conj().T @ spec.theta, np.eye(n), atol=1e-10)
    ref = np.sort(np.exp(1j * np.angle(np.linalg.eigvals(v))).view(float).reshape(-1, 2), axis=0)
    got = np.sort(np.exp(-1j * spec.quasienergies * T).view(float).reshape(-1, 2), axis=0)
    np.testing.assert_allclose(got, ref, atol=1e-9)
    assert np.all(np.abs(np.diag(spec.theta).imag) < 1e-12)


def test_assign_to_levels_prefers_largest_overlap():
    w = np.array([[0.1, 0.9], [0.95, 0.2]])
    np.testing.assert_array_equal(assign_to_levels(w), [1, 0])
    np.testing.assert_array_equal(assign_to_levels(np.full((2, 2), 0.5)), [0, 1])


def test_inversion_criterion_pi_propagator():
    v = compose_su2(Su2Params(0.3, 0.0, 1.0, np.pi / 2))
    c = inversion_criterion(floquet_spectrum(v, 5.0), 0, 1)
    assert c.satisfied and c.residual < 1e-12
    assert abs(abs(c.phase) - np.pi) < 1e-12
    with pytest.raises(ValueError):
        inversion_criterion(floquet_spectrum(v, 5.0), 1, 1)


def test_inversion_criterion_fails_off_pi():
    v = compose_su2(Su2Params(0.0, 0.0, 0.0, np.pi / 3))
    c = inversion_criterion(floquet_spectrum(v, 1.0), 0, 1)
    assert not c.satisfied and c.residual > 0.1


def test_orbit_of_pi_propagator_has_period_four():
    v = np.array([[0, 1], [-1, 0]], dtype=complex)
    o = orbit(v, [1, 0], 5)
    np.testing.assert_allclose(o[2], [-1, 0])
    np.testing.assert_allclose(o[4], [1, 0])
    with pytest.raises(ValueError):
        orbit(v, [1, 0], 0)


fractions_lt_one = st.integers(1, 20).flatmap(
    lambda d: st.integers(0, d - 1).map(lambda n: Fraction(n, d)))


@settings(max_examples=100, deadline=None)
@given(st.lists(fractions_lt_one, min_size=2, max_size=4))
def test_rational_approx_against_fraction_oracle(qs):
    T = 3.0
    q = np.array([float(x) for x in qs])
    spec = floquet_spectrum(np.diag(np.exp(-2j * np.pi * q)), T)
    m_expect = int(np.lcm.reduce([x.denominator for x in qs]))
    r = rational_approx(spec, 12)
    if m_expect <= 12:
        assert r.kind == "rational" and r.m == m_expect
        assert r.numerators == tuple(int(x * m_expect) % m_expect for x in qs)
    else:
        assert r.kind == "irrational"


def test_rational_approx_irrational():
    spec = floquet_spectrum(np.diag(np.exp(-1j * np.array([0.0, np.sqrt(2)]))), 1.0)
    assert rational_approx(spec, 50).kind == "irrational"
    with pytest.raises(ValueError):
        rational_approx(spec, 0)
