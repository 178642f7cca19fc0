"""Domain types: N-level systems, finite-support pulses and state vectors.

Units follow hbar = 1: energies are angular frequencies and times are
inverse angular frequencies.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, HermiticityViolation, NormViolation

HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-12

PULSE_KINDS = ("rectangular", "gaussian", "sin2", "sampled")
# number of standard deviations kept on each side of the Gaussian window
GAUSSIAN_HALF_WIDTH = 4.0


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class NLevelSystem:
    """Level energies ``eps_j`` and dipole matrix ``mu_jk``.

    The Hamiltonian is ``H_jk(t) = eps_j delta_jk - mu_jk E(t)``; diagonal
    entries of ``dipole`` are permanent dipole moments.
    """

    energies: np.ndarray
    dipole: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", _frozen(self.energies, float))
        object.__setattr__(self, "dipole", _frozen(self.dipole, complex))

    @property
    def n_levels(self) -> int:
        return self.energies.shape[0]

    @property
    def h0(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)


def validate_system(system: NLevelSystem) -> NLevelSystem:
    """Check shapes, finiteness and Hermiticity; return the system unchanged."""
    eps, mu = system.energies, system.dipole
    if eps.ndim != 1:
        raise DimensionMismatch(f"energies must be a vector, got shape {eps.shape}")
    n = eps.shape[0]
    if n < 2:
        raise DimensionMismatch(f"need at least 2 levels, got {n}")
    if mu.shape != (n, n):
        raise DimensionMismatch(
            f"dipole shape {mu.shape} does not match {n} energies")
    if not np.all(np.isfinite(eps)) or not np.all(np.isfinite(mu)):
        raise DimensionMismatch("energies and dipole entries must be finite")
    dev = np.max(np.abs(mu - mu.conj().T))
    if dev > HERMITICITY_TOL:
        raise HermiticityViolation(
            f"dipole matrix is not Hermitian: max |mu_jk - conj(mu_kj)| = {dev:.3e}")
    return system


@dataclass(frozen=True, eq=False)
class PulseShape:
    """Scalar field ``E(t) = amplitude * envelope(t) * cos(carrier*t + phase)``.

    The field vanishes identically outside ``[0, support]``.  ``repeats > 1``
    concatenates identical copies, i.e. the periodic continuation of the pulse
    restricted to ``repeats`` periods; the carrier restarts in every copy.

    Envelopes:

    * ``rectangular``: 1 on the whole interval.
    * ``gaussian``: ``exp(-(t - T/2)**2 / (2 sigma**2))`` with ``sigma = T/8``,
      i.e. truncated at +-4 sigma.
    * ``sin2``: ``sin(pi t / T)**2``.
    * ``sampled``: linear interpolation of ``samples`` on a uniform grid over
      ``[0, T]``; the first and last sample are forced to zero.
    """

    kind: str
    amplitude: float
    carrier: float
    duration: float
    phase: float = 0.0
    samples: tuple | None = None
    repeats: int = 1
    _grid: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}; expected one of {PULSE_KINDS}")
        for name in ("amplitude", "carrier", "duration", "phase"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.duration >= 0.0:
            raise ValueError(f"duration must be non-negative, got {self.duration}")
        if self.carrier < 0.0:
            raise ValueError(f"carrier must be >= 0, got {self.carrier}")
        if int(self.repeats) != self.repeats or self.repeats < 1:
            raise ValueError(f"repeats must be a positive integer, got {self.repeats}")
        object.__setattr__(self, "repeats", int(self.repeats))
        if self.kind == "sampled":
            if self.samples is None or len(self.samples) < 2:
                raise ValueError("sampled pulse needs at least 2 samples")
            s = np.array(self.samples, dtype=float)
            s[0] = s[-1] = 0.0
            object.__setattr__(self, "samples", tuple(float(x) for x in s))
            object.__setattr__(self, "_grid", _frozen(np.linspace(0.0, self.duration, len(s)), float))
        elif self.samples is not None:
            raise ValueError(f"samples are only allowed for kind='sampled', not {self.kind!r}")

    @property
    def support(self) -> float:
        """End of the support interval, ``repeats * duration``."""
        return self.repeats * self.duration

    def with_params(self, **changes) -> "PulseShape":
        changes.setdefault("_grid", None)
        return replace(self, **changes)

    def repeated(self, n: int) -> "PulseShape":
        return self.with_params(repeats=self.repeats * n)

    def local_time(self, t):
        """Map absolute time to time within the current copy of the pulse."""
        t = np.asarray(t, dtype=float)
        if self.repeats == 1 or self.duration == 0.0:
            return t
        k = np.clip(np.floor(t / self.duration), 0, self.repeats - 1)
        return t - k * self.duration

    def envelope(self, tau):
        """Envelope as a function of time within one copy (no support mask)."""
        tau = np.asarray(tau, dtype=float)
        T = self.duration
        if self.kind == "rectangular":
            env = np.ones_like(tau)
        elif self.kind == "gaussian":
            sigma = T / (2.0 * GAUSSIAN_HALF_WIDTH)
            env = np.exp(-0.5 * ((tau - 0.5 * T) / sigma) ** 2)
        elif self.kind == "sin2":
            env = np.sin(np.pi * tau / T) ** 2
        else:
            env = np.interp(tau, self._grid, self.samples)
        return self.amplitude * env

    def carrier_wave(self, tau):
        return np.cos(self.carrier * np.asarray(tau, dtype=float) + self.phase)

    def __call__(self, t):
        return eval_field(self, t)

    def breakpoints(self) -> np.ndarray:
        """Times inside ``[0, support]`` where integration steps must end.

        Copy boundaries, carrier-cycle boundaries (measured from the start of
        each copy) and, for sampled pulses, the interpolation nodes.
        """
        T = self.duration
        if T == 0.0:
            return np.array([0.0])
        pts = [np.array([0.0, T])]
        if self.carrier > 0.0:
            cycle = 2.0 * np.pi / self.carrier
            pts.append(np.arange(1, int(np.floor(T / cycle)) + 1) * cycle)
        if self.kind == "sampled":
            pts.append(self._grid)
        one = _dedupe(np.concatenate(pts), T)
        one = one[(one >= 0.0) & (one <= T)]
        copies = [one[:-1] + k * T for k in range(self.repeats)]
        copies.append(np.array([self.support]))
        return _dedupe(np.concatenate(copies), self.support)

    def is_constant(self) -> bool:
        """True when the field is constant on its support (single exact step)."""
        return self.amplitude == 0.0 or (self.kind == "rectangular" and self.carrier == 0.0)


def _dedupe(points, scale):
    points = np.sort(points)
    eps = 1e-12 * max(1.0, abs(scale))
    keep = np.concatenate([[True], np.diff(points) > eps])
    return points[keep]


def eval_field(pulse: PulseShape, t):
    """Field value E(t); exactly zero outside ``[0, pulse.support]``.

    Accepts scalars or arrays and returns the same shape.
    """
    t_arr = np.asarray(t, dtype=float)
    inside = (t_arr >= 0.0) & (t_arr <= pulse.support)
    tau = pulse.local_time(np.where(inside, t_arr, 0.0))
    value = np.where(inside, pulse.envelope(tau) * pulse.carrier_wave(tau), 0.0)
    if np.ndim(t) == 0:
        return float(value)
    return value


def rectangular(amplitude, carrier, duration, phase=0.0) -> PulseShape:
    return PulseShape("rectangular", amplitude, carrier, duration, phase)


def gaussian(amplitude, carrier, duration, phase=0.0) -> PulseShape:
    return PulseShape("gaussian", amplitude, carrier, duration, phase)


def sin2(amplitude, carrier, duration, phase=0.0) -> PulseShape:
    return PulseShape("sin2", amplitude, carrier, duration, phase)


def sampled(samples, duration, amplitude=1.0, carrier=0.0, phase=0.0) -> PulseShape:
    return PulseShape("sampled", amplitude, carrier, duration, phase, samples=tuple(samples))


def as_state(amplitudes, normalize=False) -> np.ndarray:
    """Return a read-only complex state vector, checking its norm."""
    psi = np.array(amplitudes, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if normalize:
        if norm == 0.0:
            raise NormViolation("cannot normalize the zero vector")
        psi = psi / norm
    elif abs(norm ** 2 - 1.0) > NORM_TOL:
        raise NormViolation(f"state norm squared is {norm ** 2:.15g}, expected 1")
    psi.setflags(write=False)
    return psi


def basis_state(n: int, j: int) -> np.ndarray:
    psi = np.zeros(n, dtype=complex)
    psi[j] = 1.0
    psi.setflags(write=False)
    return psi
