import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floquetpi.errors import DimensionMismatch, HermiticityViolation, NormViolation
from floquetpi.model import (NLevelSystem, PulseShape, as_state, basis_state, eval_field,
                             gaussian, rectangular, sampled, sin2, validate_system)


def test_field_is_zero_outside_support():
    p = rectangular(0.7, 1.3, 5.0, phase=0.4)
    assert eval_field(p, -1e-9) == 0.0
    assert eval_field(p, 5.0 + 1e-9) == 0.0
    assert eval_field(p, 0.0) == pytest.approx(0.7 * np.cos(0.4), abs=1e-15)
    assert eval_field(p, 5.0) == pytest.approx(0.7 * np.cos(1.3 * 5.0 + 0.4), abs=1e-15)


def test_field_vectorized_matches_scalar():
    p = sin2(0.3, 2.0, 4.0, phase=-1.0)
    t = np.linspace(-1, 5, 37)
    np.testing.assert_array_equal(eval_field(p, t), [eval_field(p, x) for x in t])
    assert isinstance(eval_field(p, 1.0), float)


@pytest.mark.parametrize("make", [gaussian, sin2])
def test_smooth_envelopes_peak_at_center(make):
    p = make(2.0, 0.0, 8.0)
    assert p.envelope(4.0) == pytest.approx(2.0)
    assert p.envelope(1.5) == pytest.approx(p.envelope(6.5))
    assert p.envelope(0.0) < 2.0 * 1e-3


def test_gaussian_truncated_at_four_sigma():
    p = gaussian(1.0, 0.0, 8.0)          # sigma = 1
    assert p.envelope(0.0) == pytest.approx(np.exp(-8.0))


def test_sampled_endpoints_forced_and_interpolated():
    p = sampled([5.0, 1.0, 3.0, 7.0], 3.0, amplitude=2.0)
    assert p.samples == (0.0, 1.0, 3.0, 0.0)
    assert eval_field(p, 1.5) == pytest.approx(2.0 * 2.0)
    assert eval_field(p, 0.0) == 0.0


def test_repeated_pulse_restarts_each_copy():
    p = rectangular(1.0, 0.9, 2.0, phase=0.3).repeated(3)
    assert p.support == 6.0
    t = np.array([0.1, 0.7, 1.9])
    for k in range(3):
        np.testing.assert_allclose(eval_field(p, t + 2.0 * k), eval_field(p, t), atol=1e-14)


def test_breakpoints_cover_cycles_and_copies():
    p = rectangular(1.0, 2 * np.pi, 2.5).repeated(2)      # unit carrier period
    bp = p.breakpoints()
    np.testing.assert_allclose(bp, [0, 1, 2, 2.5, 3.5, 4.5, 5.0], atol=1e-12)


def test_pulse_validation():
    with pytest.raises(ValueError):
        PulseShape("triangle", 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        rectangular(1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        rectangular(1.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        PulseShape("rectangular", 1.0, 1.0, 1.0, samples=(0.0, 1.0))


def test_system_validation():
    with pytest.raises(HermiticityViolation):
        validate_system(NLevelSystem([0, 1], [[0, 1], [2, 0]]))
    with pytest.raises(DimensionMismatch):
        validate_system(NLevelSystem([0, 1, 2], [[0, 1], [1, 0]]))
    s = validate_system(NLevelSystem([0, 1], [[0.5, 1j], [-1j, 0]]))
    assert s.n_levels == 2
    with pytest.raises(ValueError):
        s.energies[0] = 3.0


def test_states():
    with pytest.raises(NormViolation):
        as_state([1, 1])
    psi = as_state([3, 4j], normalize=True)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    with pytest.raises(NormViolation):
        as_state([0, 0], normalize=True)
    np.testing.assert_array_equal(basis_state(3, 2), [0, 0, 1])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 3.0), st.floats(0.0, 5.0), st.floats(0.1, 10.0), st.floats(-4, 4),
       st.sampled_from(["rectangular", "gaussian", "sin2"]))
def test_field_bounded_by_amplitude(amp, w, T, phi, kind):
    p = PulseShape(kind, amp, w, T, phi)
    t = np.linspace(-1.0, T + 1.0, 201)
    assert np.all(np.abs(eval_field(p, t)) <= amp + 1e-15)
