"""Two-level propagators: U(2) parametrization, eigensystem and PI tests.

A 2x2 unitary is written as::

    V = exp(i chi) [[ exp(i d1) cos(delta),  exp(i d2) sin(delta)],
                    [-exp(-i d2) sin(delta), exp(-i d1) cos(delta)]]

``delta`` alone fixes the populations; population inversion needs
``delta = (2k+1) pi/2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEigenvectors, NormViolation, NotUnitary

UNITARY_TOL = 1e-8
# below this cos(delta) or sin(delta) the matching phase is undefined
PHASE_TOL = 1e-14
DEGENERACY_TOL = 1e-9


def wrap_angle(x):
    """Reduce angles to ``(-pi, pi]``."""
    y = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)
    if np.ndim(y) == 0:
        return float(y)
    return y


@dataclass(frozen=True)
class Su2Params:
    chi: float
    delta1: float
    delta2: float
    delta: float


@dataclass(frozen=True, eq=False)
class Eigensystem2:
    """Eigenvalues ``zeta1, zeta2`` and normalized eigenvectors as columns.

    ``zeta1`` is the root with ``Im(exp(-i chi) zeta) >= 0``, so a PI
    propagator has ``zeta1 = +i exp(i chi)``.  Each eigenvector is gauge-fixed
    with its first nonzero component real and positive.
    """

    zeta1: complex
    zeta2: complex
    vectors: np.ndarray
    chi: float


@dataclass(frozen=True)
class PiAngle:
    is_pi: bool
    k: int | None
    distance: float


@dataclass(frozen=True)
class SufficientCheck:
    is_pi_rotation: bool
    alpha: float | None
    deviation: float


def _as_2x2(v):
    v = np.asarray(v, dtype=complex)
    if v.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {v.shape}")
    return v


def check_unitary(v, tol=UNITARY_TOL):
    v = np.asarray(v, dtype=complex)
    dev = np.max(np.abs(v.conj().T @ v - np.eye(v.shape[0])))
    if dev > tol:
        raise NotUnitary(f"matrix is not unitary: max |V^H V - I| = {dev:.3e}")
    return v


def decompose_su2(v) -> Su2Params:
    """Parameters ``(chi, delta1, delta2, delta)`` of a 2x2 unitary.

    Branches: ``chi = arg(det V)/2`` in ``(-pi/2, pi/2]``, ``delta`` in
    ``[0, pi/2]``, phase differences wrapped to ``(-pi, pi]``.  A phase whose
    trigonometric factor vanishes is reported as 0.
    """
    v = check_unitary(_as_2x2(v))
    delta = float(np.arctan2(abs(v[0, 1]), abs(v[0, 0])))
    chi = float(np.angle(np.linalg.det(v))) / 2.0
    d1 = wrap_angle(np.angle(v[0, 0]) - chi) if np.cos(delta) > PHASE_TOL else 0.0
    d2 = wrap_angle(np.angle(v[0, 1]) - chi) if np.sin(delta) > PHASE_TOL else 0.0
    return Su2Params(chi, d1, d2, delta)


def compose_su2(p: Su2Params) -> np.ndarray:
    c, s = np.cos(p.delta), np.sin(p.delta)
    e1, e2 = np.exp(1j * p.delta1), np.exp(1j * p.delta2)
    m = np.array([[e1 * c, e2 * s], [-s / e2, c / e1]])
    return np.exp(1j * p.chi) * m


def pi_angle_check(delta: float, tol: float = 1e-6) -> PiAngle:
    """Is ``delta`` an odd multiple of pi/2?  ``2k+1`` counts the inversions."""
    k = int(np.round(delta / np.pi - 0.5))
    dist = abs(delta - (2 * k + 1) * np.pi / 2)
    if dist < tol:
        return PiAngle(True, k, dist)
    return PiAngle(False, None, dist)


def _null_vector(a):
    """Unit vector spanning the kernel of a rank-1 2x2 matrix."""
    r0 = np.array([a[0, 1], -a[0, 0]])
    r1 = np.array([a[1, 1], -a[1, 0]])
    v = r0 if np.linalg.norm(r0) >= np.linalg.norm(r1) else r1
    return v / np.linalg.norm(v)


def _gauge(v):
    k = int(np.argmax(np.abs(v) > 1e-12))
    return v * np.exp(-1j * np.angle(v[k]))


def eigensystem_2ls(v) -> Eigensystem2:
    """Eigenvalues from the characteristic polynomial of the U(2) form.

    With ``x = cos(delta) cos(delta1)`` the roots are
    ``exp(i chi) (x +- i sqrt(1 - x**2))``.
    """
    v = check_unitary(_as_2x2(v))
    chi = float(np.angle(np.linalg.det(v))) / 2.0
    x = float(np.clip((np.exp(-1j * chi) * np.trace(v) / 2.0).real, -1.0, 1.0))
    y = np.sqrt(1.0 - x * x)
    z1 = np.exp(1j * chi) * (x + 1j * y)
    z2 = np.exp(1j * chi) * (x - 1j * y)
    if abs(z1 - z2) < DEGENERACY_TOL:
        vecs = np.eye(2, dtype=complex)
    else:
        e1 = _gauge(_null_vector(v - z1 * np.eye(2)))
        e2 = _gauge(_null_vector(v - z2 * np.eye(2)))
        vecs = np.column_stack([e1, e2])
    return Eigensystem2(complex(z1), complex(z2), vecs, chi)


def sufficient_pi_check(eig: Eigensystem2, tol: float = 1e-6) -> SufficientCheck:
    """Eigenvector test for population inversion.

    A PI propagator has the eigenvector matrix
    ``[[1, -exp(i a)], [exp(-i a), 1]] / sqrt(2)`` (up to column phases),
    i.e. every entry has modulus ``1/sqrt(2)``.  The angle ``a`` is read off
    the second component of the ``zeta1`` eigenvector; it equals
    ``delta2 - pi/2``.
    """
    if abs(eig.zeta1 - eig.zeta2) < DEGENERACY_TOL:
        raise DegenerateEigenvectors(
            f"eigenvalues coincide: |zeta1 - zeta2| = {abs(eig.zeta1 - eig.zeta2):.3e}")
    vecs = np.column_stack([_gauge(eig.vectors[:, 0]), _gauge(eig.vectors[:, 1])])
    dev = float(np.max(np.abs(np.abs(vecs) - 1.0 / np.sqrt(2.0))))
    if dev < tol:
        return SufficientCheck(True, wrap_angle(-np.angle(vecs[1, 0])), dev)
    return SufficientCheck(False, None, dev)


def pspi_delta2(chi: float, beta: float) -> float:
    """``delta2`` that sends level 1 to ``exp(i beta)`` times level 2 (k = 0)."""
    return wrap_angle(chi - beta + np.pi)


def pspc_targets(a: complex, b: complex, chi: float = 0.0, tol: float = 1e-10) -> Su2Params:
    """Solve ``a = exp(i(chi+d1)) cos(delta)``, ``b = -exp(i(chi-d2)) sin(delta)``.

    ``(a, b)`` is the target image of the first basis vector.  Undetermined
    phases (``a = 0`` or ``b = 0``) are set to 0.
    """
    norm = abs(a) ** 2 + abs(b) ** 2
    if abs(norm - 1.0) > tol:
        raise NormViolation(f"|a|^2 + |b|^2 = {norm:.15g}, expected 1")
    delta = float(np.arctan2(abs(b), abs(a)))
    d1 = wrap_angle(np.angle(a) - chi) if abs(a) > PHASE_TOL else 0.0
    d2 = wrap_angle(chi - np.angle(-b)) if abs(b) > PHASE_TOL else 0.0
    return Su2Params(chi, d1, d2, delta)
