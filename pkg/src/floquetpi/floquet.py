"""Floquet analysis of a monodromy matrix ``V = U(T, 0)``.

Convention: ``V = theta @ diag(exp(-i omega_j T)) @ theta^H`` with the
quasienergies ``omega_j`` reduced to the first zone ``[0, 2 pi / T)``.  Free
evolution then gives ``omega_j = eps_j mod 2 pi / T``.  Inversion tests only
use spacings modulo ``2 pi``, which do not depend on this sign choice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .su2 import wrap_angle


@dataclass(frozen=True, eq=False)
class FloquetSpectrum:
    """Quasienergies and eigenvectors; column ``j`` of ``theta`` belongs to level ``j``."""

    quasienergies: np.ndarray
    theta: np.ndarray
    period: float

    @property
    def omega0(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def q(self) -> np.ndarray:
        """Quasienergies in units of ``omega0``, in ``[0, 1)``."""
        return self.quasienergies / self.omega0

    def reconstruct(self) -> np.ndarray:
        ph = np.exp(-1j * self.quasienergies * self.period)
        return (self.theta * ph) @ self.theta.conj().T


@dataclass(frozen=True)
class InversionCriterion:
    satisfied: bool
    n: int
    residual: float
    phase: float


@dataclass(frozen=True)
class RationalApprox:
    kind: str
    m: int | None = None
    numerators: tuple | None = None


def assign_to_levels(vectors: np.ndarray) -> np.ndarray:
    """Greedy max-|overlap| matching of eigenvector columns to basis levels.

    Returns ``perm`` with ``perm[level] = column``.  Ties go to the lowest
    index (row-major first occurrence).
    """
    w = np.abs(vectors).copy()
    n = w.shape[0]
    perm = np.empty(n, dtype=int)
    for _ in range(n):
        j, k = np.unravel_index(int(np.argmax(w)), w.shape)
        perm[j] = k
        w[j, :] = -1.0
        w[:, k] = -1.0
    return perm


def floquet_spectrum(v, period: float) -> FloquetSpectrum:
    """Diagonalize a unitary monodromy matrix via a complex Schur form.

    For a normal matrix the Schur form is diagonal and the Schur vectors are
    an orthonormal eigenbasis, also inside degenerate eigenspaces.
    """
    v = np.asarray(v, dtype=complex)
    tri, z = scipy.linalg.schur(v, output="complex")
    zeta = np.diag(tri)
    omega0 = 2.0 * np.pi / period
    omega = np.mod(-np.angle(zeta) / period, omega0)
    omega[omega >= omega0] -= omega0
    perm = assign_to_levels(z)
    theta = z[:, perm]
    diag = np.diag(theta).copy()
    phase = np.where(np.abs(diag) > 1e-12, np.exp(-1j * np.angle(diag)), 1.0)
    theta = theta * phase
    return FloquetSpectrum(omega[perm], theta, float(period))


def inversion_criterion(spec: FloquetSpectrum, i: int, f: int,
                        tol: float = 1e-6) -> InversionCriterion:
    """Necessary PI condition ``(omega_f - omega_i) T = (2n+1) pi``.

    The residual is the distance of the phase from ``pi`` on the circle.
    It is necessary only; see :func:`floquetpi.su2.sufficient_pi_check`.
    """
    if i == f:
        raise ValueError("initial and final level must differ")
    phase = float((spec.quasienergies[f] - spec.quasienergies[i]) * spec.period)
    residual = abs(wrap_angle(phase - np.pi))
    n = int(np.round((phase - np.pi) / (2.0 * np.pi)))
    return InversionCriterion(residual < tol, n, residual, phase)


def orbit(v, psi0, m: int) -> list:
    """``[psi0, V psi0, ..., V^(m-1) psi0]``."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    v = np.asarray(v, dtype=complex)
    out = [np.array(psi0, dtype=complex)]
    for _ in range(m - 1):
        out.append(v @ out[-1])
    return out


def rational_approx(spec: FloquetSpectrum, m_max: int, tol: float = 1e-9) -> RationalApprox:
    """Smallest common denominator ``m <= m_max`` with ``|q_j - n_j/m| < tol``."""
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    q = spec.q
    for m in range(1, m_max + 1):
        n = np.round(q * m)
        if np.all(np.abs(q - n / m) < tol):
            return RationalApprox("rational", m, tuple(int(x) % m for x in n))
    return RationalApprox("irrational")
