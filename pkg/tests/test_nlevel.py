import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from floquetpi.errors import DomainError, ParallelVectors
from floquetpi.nlevel import (Scenario, block_residual, build_rotation, classify_transfer,
                              column_row_residuals, condition_count, count_discrepancies,
                              effective_pair, rotated)
from floquetpi.su2 import Su2Params, compose_su2

# expected counts, rows N = 2..10, columns in Scenario order
EXPECTED = {
    2: (4, 2, 3, 2, 4, 2), 3: (6, 3, 9, 4, 9, 9), 4: (8, 4, 13, 6, 16, 16),
    5: (10, 5, 17, 8, 25, 25), 6: (12, 6, 21, 10, 36, 34), 7: (14, 7, 25, 12, 44, 42),
    8: (16, 8, 29, 14, 52, 50), 9: (18, 9, 33, 16, 60, 58), 10: (20, 10, 37, 18, 68, 66),
}


def test_condition_counts_table():
    for n, row in EXPECTED.items():
        assert tuple(condition_count(n, s) for s in Scenario) == row


def test_only_documented_discrepancy():
    assert count_discrepancies() == [(2, "PSPI_eff2ls_ortho", 3, 4)]
    assert condition_count(2, "PSPI_eff2ls_ortho", formula=True) == 4


def test_condition_count_domain():
    with pytest.raises(DomainError):
        condition_count(1, Scenario.PC_CONTROL)
    with pytest.raises(ValueError):
        condition_count(3, "nonsense")
    assert condition_count(20, Scenario.PSPC_CONTROL) == 40


def _random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 6))
def test_build_rotation_properties(seed, n):
    rng = np.random.default_rng(seed)
    psi_i, psi_f = _random_state(rng, n), _random_state(rng, n)
    r = build_rotation(psi_i, psi_f)
    np.testing.assert_allclose(r @ r.conj().T, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(r @ psi_i, np.eye(n)[0], atol=1e-12)
    assert np.max(np.abs((r @ psi_f)[2:]), initial=0.0) < 1e-12


def test_build_rotation_orthogonal_pair_maps_to_e2():
    psi_i = np.array([1, 1j, 0, 0]) / np.sqrt(2)
    psi_f = np.array([1, -1j, 0, 0]) / np.sqrt(2)
    r = build_rotation(psi_i, psi_f)
    np.testing.assert_allclose(r @ psi_f, [0, 1, 0, 0], atol=1e-12)
    with pytest.raises(ParallelVectors):
        build_rotation(psi_i, 1j * psi_i)


def test_block_residual_block_diagonal():
    v = np.zeros((4, 4), dtype=complex)
    v[:2, :2] = compose_su2(Su2Params(0.1, 0.2, 0.3, np.pi / 2))
    v[2:, 2:] = unitary_group.rvs(2, random_state=3)
    assert block_residual(v) == 0.0
    assert block_residual(v, build_rotation(np.eye(4)[0], np.eye(4)[1])) < 1e-15


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(3, 6))
def test_unitarity_corollary(seed, n):
    """Column i supported on level f forces row f to vanish off column i."""
    rng = np.random.default_rng(seed)
    i, f = rng.choice(n, 2, replace=False)
    rest = [k for k in range(n) if k != f]
    v = np.zeros((n, n), dtype=complex)
    v[f, i] = np.exp(1j * rng.uniform(-np.pi, np.pi))
    w = unitary_group.rvs(n - 1, random_state=int(rng.integers(2**31)))
    cols = [k for k in range(n) if k != i]
    v[np.ix_(rest, cols)] = w
    col, row = column_row_residuals(v, i, f)
    assert col == 0.0 and row < 1e-10


def test_classify_pi_and_pspi():
    v = compose_su2(Su2Params(0.0, 0.0, np.pi, np.pi / 2))    # V e1 = e2
    rep = classify_transfer(v, [1, 0], [0, 1])
    assert rep.flags == {"PI": True, "PSPI": True, "PC": False, "PSPC": False}
    assert rep.label() == "PSPI,PI"
    assert rep.criterion.satisfied and rep.sufficient.is_pi_rotation
    locked = classify_transfer(v, [1, 0], [0, 1], beta=np.pi / 2)
    assert locked.flags["PI"] and not locked.flags["PSPI"]


def test_classify_population_only():
    v = compose_su2(Su2Params(0.0, 0.0, 0.7, np.pi / 2))
    rep = classify_transfer(v, [1, 0], [0, 1], beta=0.0)
    assert rep.flags["PI"] and not rep.flags["PSPI"]
    assert rep.residuals["PSPI"] > 0.1


def test_classify_nonorthogonal():
    psi_i = np.array([1, 0])
    psi_f = np.array([1, 1]) / np.sqrt(2)
    v = np.array([[1, -1], [1, 1]]) / np.sqrt(2)
    rep = classify_transfer(v, psi_i, psi_f)
    assert rep.flags == {"PI": False, "PSPI": False, "PC": True, "PSPC": True}
    assert rep.criterion is None and rep.block_residual == 0.0


def test_classify_three_level_block():
    v = np.eye(3, dtype=complex)
    v[:2, :2] = [[0, 1j], [1j, 0]]
    rep = classify_transfer(v, [1, 0, 0], [0, 1, 0])
    assert rep.block_residual == 0.0 and rep.flags["PI"]
    crit, suff, resid = effective_pair(v, [1, 0, 0], [0, 1, 0])
    assert crit.residual < 1e-12 and suff.is_pi_rotation and resid == 0.0


def test_effective_pair_parallel_returns_none():
    assert effective_pair(np.eye(2), [1, 0], [1, 0]) == (None, None, None)


def test_rotated_is_similarity():
    rng = np.random.default_rng(0)
    v = unitary_group.rvs(4, random_state=1)
    r = build_rotation(_random_state(rng, 4), _random_state(rng, 4))
    np.testing.assert_allclose(np.linalg.eigvals(rotated(v, r)).prod(), np.linalg.det(v))
