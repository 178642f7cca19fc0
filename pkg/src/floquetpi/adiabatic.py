"""Period-by-period Floquet treatment of pulses with a slowly varying envelope.

The pulse is cut into carrier cycles.  Inside cycle ``p`` the envelope is
frozen at its value at the cycle midpoint, which turns the cycle into one
period of a continuous wave with monodromy
``V_p = Theta_p exp(-i Omega_p d_p) Theta_p^H``.  Neglecting the frame
change between cycles (``Theta_p^H Theta_{p-1} ~ I``) gives

    V ~ Theta_P exp(-i sum_p Omega_p d_p) Theta_1^H

and the inversion condition on the accumulated quasienergy spacing,
``sum_p (omega_f - omega_i)_p d_p = (2n+1) pi``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .errors import FrameMatchFailure, NoCarrier
from .floquet import FloquetSpectrum, assign_to_levels, floquet_spectrum
from .model import NLevelSystem, PulseShape, rectangular
from .propagation import DEFAULT_CONFIG, IntegratorConfig, monodromy
from .su2 import wrap_angle

# smallest acceptable |overlap| between matched frames of adjacent cycles
FRAME_OVERLAP_MIN = 0.5


@dataclass(frozen=True, eq=False)
class PeriodDecomposition:
    boundaries: np.ndarray
    frozen_pulses: tuple

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def n_periods(self) -> int:
        return len(self.frozen_pulses)


def split_periods(pulse: PulseShape) -> PeriodDecomposition:
    """Cut ``[0, T]`` into whole carrier cycles counted from the pulse start.

    A trailing partial cycle is merged into the last period; a pulse shorter
    than one cycle is a single period.
    """
    if pulse.carrier <= 0.0:
        raise NoCarrier("adiabatic splitting needs a carrier frequency > 0")
    T = pulse.support
    cycle = 2.0 * np.pi / pulse.carrier
    n_full = max(1, int(np.floor(T / cycle + 1e-9)))
    bounds = np.append(np.arange(n_full) * cycle, T)
    frozen = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        tau_a = float(pulse.local_time(a))
        amp = float(pulse.envelope(pulse.local_time(0.5 * (a + b))))
        frozen.append(rectangular(amp, pulse.carrier, b - a,
                                  phase=pulse.phase + pulse.carrier * tau_a))
    return PeriodDecomposition(bounds, tuple(frozen))


def instantaneous_floquet(system: NLevelSystem, p: int, decomp: PeriodDecomposition,
                          cfg: IntegratorConfig = DEFAULT_CONFIG) -> FloquetSpectrum:
    """Floquet spectrum of the frozen-envelope cycle ``p``."""
    pulse = decomp.frozen_pulses[p]
    return floquet_spectrum(monodromy(system, pulse, cfg), pulse.duration)


@dataclass(frozen=True, eq=False)
class AdiabaticSweep:
    """Frame-matched per-cycle Floquet data.

    ``quasienergies[p, j]`` and ``frames[p][:, j]`` follow the state that
    starts on bare level ``j`` in the first cycle; quasienergies are unwrapped
    to be continuous in ``p``.
    """

    decomposition: PeriodDecomposition
    quasienergies: np.ndarray
    frames: np.ndarray
    monodromies: np.ndarray

    def adiabatic_propagator(self) -> np.ndarray:
        phase = np.exp(-1j * self.quasienergies.T @ self.decomposition.durations)
        return (self.frames[-1] * phase) @ self.frames[0].conj().T

    def product_propagator(self) -> np.ndarray:
        """Ordered product of the frozen-cycle monodromies (no frame approximation)."""
        u = np.eye(self.frames.shape[1], dtype=complex)
        for v in self.monodromies:
            u = v @ u
        return u


def _unwrap_to(value, reference, omega0):
    return value + omega0 * np.round((reference - value) / omega0)


def adiabatic_sweep(system: NLevelSystem, pulse: PulseShape,
                    cfg: IntegratorConfig = DEFAULT_CONFIG, threads: int = 1) -> AdiabaticSweep:
    decomp = split_periods(pulse)
    d = decomp.durations

    def one(p):
        v = monodromy(system, decomp.frozen_pulses[p], cfg).entries
        return v, floquet_spectrum(v, d[p])

    idx = range(decomp.n_periods)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(one, idx))
    else:
        results = [one(p) for p in idx]

    n = system.n_levels
    omegas = np.empty((decomp.n_periods, n))
    frames = np.empty((decomp.n_periods, n, n), dtype=complex)
    omegas[0] = results[0][1].quasienergies
    frames[0] = results[0][1].theta
    for p in range(1, decomp.n_periods):
        spec = results[p][1]
        prev = frames[p - 1]
        overlap = prev.conj().T @ spec.theta
        perm = assign_to_levels(overlap)
        matched = np.abs(overlap[np.arange(n), perm])
        if np.min(matched) < FRAME_OVERLAP_MIN:
            raise FrameMatchFailure(
                f"cycle {p}: frame overlap {np.min(matched):.3f} < {FRAME_OVERLAP_MIN}; "
                "envelope is not adiabatic")
        theta = spec.theta[:, perm]
        theta = theta * np.exp(-1j * np.angle(overlap[np.arange(n), perm]))
        frames[p] = theta
        omegas[p] = _unwrap_to(spec.quasienergies[perm], omegas[p - 1], 2.0 * np.pi / d[p])
    return AdiabaticSweep(decomp, omegas, frames, np.array([r[0] for r in results]))


def adiabatic_propagator(system: NLevelSystem, pulse: PulseShape,
                         cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``Theta_P exp(-i sum_p Omega_p d_p) Theta_1^H``."""
    return adiabatic_sweep(system, pulse, cfg).adiabatic_propagator()


@dataclass(frozen=True)
class AdiabaticCriterion:
    integral: float
    nearest_odd_pi: int
    residual: float


def spacing_integral(sweep: AdiabaticSweep, i: int, f: int) -> float:
    """``sum_p (omega_f - omega_i)_p d_p`` with the spacing sewn across cycles.

    The first spacing is taken in ``(-omega0/2, omega0/2]``; each later one
    on the branch closest to its predecessor.
    """
    d = sweep.decomposition.durations
    raw = sweep.quasienergies[:, f] - sweep.quasienergies[:, i]
    omega0 = 2.0 * np.pi / d
    s = np.empty_like(raw)
    s[0] = wrap_angle(raw[0] * d[0]) / d[0]
    for p in range(1, len(raw)):
        s[p] = _unwrap_to(raw[p], s[p - 1], omega0[p])
    return float(np.sum(s * d))


def adiabatic_criterion(system: NLevelSystem, pulse: PulseShape, i: int, f: int,
                        cfg: IntegratorConfig = DEFAULT_CONFIG,
                        sweep: AdiabaticSweep | None = None) -> AdiabaticCriterion:
    if sweep is None:
        sweep = adiabatic_sweep(system, pulse, cfg)
    integral = spacing_integral(sweep, i, f)
    n = int(np.round((integral - np.pi) / (2.0 * np.pi)))
    residual = abs(wrap_angle(integral - np.pi))
    return AdiabaticCriterion(integral, 2 * n + 1, residual)


def adiabatic_errors(system: NLevelSystem, pulse: PulseShape, exact,
                     cfg: IntegratorConfig = DEFAULT_CONFIG,
                     sweep: AdiabaticSweep | None = None) -> dict:
    """Max-norm distances of the approximations to the exact propagator.

    ``product``: frozen-envelope cycle product.  ``frames``: the adiabatic
    formula with ``Theta_p^H Theta_{p-1} = I``.  ``rectangle``: a rectangular
    pulse of the same duration and pulse area.
    """
    if sweep is None:
        sweep = adiabatic_sweep(system, pulse, cfg)
    exact = np.asarray(exact)
    t = np.linspace(0.0, pulse.duration, 4097)
    mean_env = float(trapezoid(pulse.envelope(t), t) / pulse.duration) if pulse.duration else 0.0
    rect = rectangular(mean_env, pulse.carrier, pulse.duration, pulse.phase).repeated(pulse.repeats)
    v_rect = monodromy(system, rect, cfg).entries
    return {
        "product": float(np.max(np.abs(sweep.product_propagator() - exact))),
        "frames": float(np.max(np.abs(sweep.adiabatic_propagator() - exact))),
        "rectangle": float(np.max(np.abs(v_rect - exact))),
    }
