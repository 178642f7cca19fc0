"""Time-dependent Schrodinger propagation with the exponential midpoint rule.

Every step multiplies by ``exp(-i K(t + h/2) h)`` where ``K`` is the
traceless part of ``H``; the scalar part ``tr H / N`` commutes with
everything and is integrated by 3-point Gauss-Legendre quadrature, so each step is unitary to
rounding and ``det U`` tracks ``exp(-i int tr H)`` to quadrature accuracy.

Step control works per segment between pulse breakpoints: the uniform step
of a segment is halved until one full step and two half steps agree to
``tol`` in max-norm on every step of that segment.  The accepted step is the
two-half-step product.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import StepLimitExceeded
from .model import NLevelSystem, PulseShape, eval_field

# steps evaluated per vectorized batch
_CHUNK = 1 << 16
_GL3 = tuple(zip(0.5 + 0.5 * np.polynomial.legendre.leggauss(3)[0],
                 0.5 * np.polynomial.legendre.leggauss(3)[1]))


@dataclass(frozen=True)
class IntegratorConfig:
    step_init: float = 0.1
    tol: float = 1e-10
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if not self.max_steps > 0:
            raise ValueError(f"max_steps must be > 0, got {self.max_steps}")
        if not self.step_init > 0:
            raise ValueError(f"step_init must be > 0, got {self.step_init}")


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True, eq=False)
class PropagatorMatrix:
    """``U(t1, t0)`` together with the step grid that produced it."""

    entries: np.ndarray
    t0: float
    t1: float
    grid: np.ndarray | None = None

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    @property
    def n_steps(self) -> int:
        return 0 if self.grid is None else len(self.grid) - 1

    def unitarity_error(self) -> float:
        u = self.entries
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def hamiltonian_at(system: NLevelSystem, pulse: PulseShape, t):
    """``H_jk(t) = eps_j delta_jk - mu_jk E(t)``; vectorized over ``t``."""
    e = np.asarray(eval_field(pulse, t), dtype=float)
    return system.h0 - system.dipole * e[..., None, None]


def _expm_herm(k, dt):
    """``exp(-i k dt)`` for a stack of Hermitian matrices ``k``."""
    n = k.shape[-1]
    dt = np.asarray(dt, dtype=float)
    if n == 2:
        # closed form, valid for traceless k
        x = k[..., 0, 1].real
        y = k[..., 0, 1].imag
        z = k[..., 0, 0].real
        b = np.sqrt(x * x + y * y + z * z)
        c = np.cos(b * dt)
        s = dt * np.sinc(b * dt / np.pi)
        out = -1j * s[..., None, None] * k
        out[..., 0, 0] += c
        out[..., 1, 1] += c
        return out
    w, q = np.linalg.eigh(k)
    ph = np.exp(-1j * w * dt[..., None])
    return (q * ph[..., None, :]) @ np.swapaxes(q.conj(), -1, -2)


class _Stepper:
    """Vectorized evaluation of midpoint steps on arbitrary step lists."""

    def __init__(self, system, pulse):
        n = system.n_levels
        eye = np.eye(n)
        h0 = system.h0
        mu = system.dipole
        self.n = n
        self.k0 = h0 - np.trace(h0) / n * eye
        self.mu_tl = mu - np.trace(mu) / n * eye
        self.tr_h0 = float(np.trace(h0).real)
        self.tr_mu = complex(np.trace(mu)).real
        self.system = system
        self.pulse = pulse

    def traceless(self, t):
        e = eval_field(self.pulse, t)
        return self.k0 - self.mu_tl * np.asarray(e)[..., None, None]

    def mean_trace(self, t):
        return (self.tr_h0 - self.tr_mu * np.asarray(eval_field(self.pulse, t))) / self.n

    def steps(self, starts, lengths, want_error=True):
        """Accepted step matrices and their full-vs-half error estimates."""
        h = lengths
        u_a = _expm_herm(self.traceless(starts + 0.25 * h), 0.5 * h)
        u_b = _expm_herm(self.traceless(starts + 0.75 * h), 0.5 * h)
        u = u_b @ u_a
        err = None
        if want_error:
            u_full = _expm_herm(self.traceless(starts + 0.5 * h), h)
            err = np.max(np.abs(u_full - u), axis=(-2, -1))
        # 3-point Gauss-Legendre; nodes stay strictly inside the step, so a
        # jump of the field at a segment end is never sampled
        f = sum(w * self.mean_trace(starts + x * h) for x, w in _GL3)
        phase = np.exp(-1j * f * h)
        return u * phase[:, None, None], err

    def exact(self, a, b):
        """Single exact step for a segment on which the field is constant."""
        h = hamiltonian_at(self.system, self.pulse, 0.5 * (a + b))
        w, q = np.linalg.eigh(h)
        return (q * np.exp(-1j * w * (b - a))) @ q.conj().T


def _segments(pulse: PulseShape, t0: float, t1: float):
    """Split ``[t0, t1]`` at pulse breakpoints; flag constant-field pieces."""
    bp = pulse.breakpoints()
    inner = bp[(bp > t0) & (bp < t1)]
    edges = np.concatenate([[t0], inner, [t1]])
    segs = []
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0.0:
            continue
        outside = b <= 0.0 or a >= pulse.support
        segs.append((float(a), float(b), outside or pulse.is_constant()))
    return segs


def _tree_product(mats):
    """Ordered product ``mats[-1] @ ... @ mats[0]``."""
    while len(mats) > 1:
        if len(mats) % 2:
            last = mats[-1:]
            mats = np.concatenate([mats[1:-1:2] @ mats[0:-1:2], last])
        else:
            mats = mats[1::2] @ mats[0::2]
    return mats[0]


def _segment_steps(starts_n, seg_a, seg_len):
    """Step start times and lengths for segments with ``starts_n`` steps each."""
    counts = np.asarray(starts_n)
    seg_idx = np.repeat(np.arange(len(counts)), counts)
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
    j = np.arange(counts.sum()) - np.repeat(offsets, counts)
    step_len = (seg_len / counts)[seg_idx]
    starts = seg_a[seg_idx] + j * step_len
    return starts, step_len, offsets


@dataclass
class _Segment:
    a: float
    b: float
    n: int
    product: np.ndarray | None = None
    steps: np.ndarray | None = None


def _integrate(system, pulse, t0, t1, cfg, keep_steps=False):
    """Adaptive integration over ``[t0, t1]`` returning per-segment results."""
    stepper = _Stepper(system, pulse)
    pieces = _segments(pulse, t0, t1)
    segs = [_Segment(a, b, 1) for a, b, _ in pieces]
    pending = []
    for seg, (_, _, const) in zip(segs, pieces):
        if const:
            u = stepper.exact(seg.a, seg.b)
            seg.product = u
            if keep_steps:
                seg.steps = u[None]
        else:
            seg.n = max(1, math.ceil((seg.b - seg.a) / cfg.step_init - 1e-9))
            pending.append(seg)

    while pending:
        total = sum(s.n for s in segs)
        if total > cfg.max_steps:
            raise StepLimitExceeded(
                f"step control needs {total} steps, more than max_steps={cfg.max_steps}")
        batch, size = [], 0
        for s in pending:
            if batch and size + s.n > _CHUNK:
                break
            batch.append(s)
            size += s.n
        rest = pending[len(batch):]
        counts = np.array([s.n for s in batch])
        seg_a = np.array([s.a for s in batch])
        seg_len = np.array([s.b - s.a for s in batch])
        starts, lengths, offsets = _segment_steps(counts, seg_a, seg_len)
        mats = np.empty((len(starts), system.n_levels, system.n_levels), dtype=complex)
        errs = np.empty(len(starts))
        for lo in range(0, len(starts), _CHUNK):
            sl = slice(lo, lo + _CHUNK)
            mats[sl], errs[sl] = stepper.steps(starts[sl], lengths[sl])
        seg_err = np.maximum.reduceat(errs, offsets)
        failed = []
        for s, off, cnt, e in zip(batch, offsets, counts, seg_err):
            if e < cfg.tol:
                block = mats[off:off + cnt]
                s.product = _tree_product(block)
                if keep_steps:
                    s.steps = block.copy()
            else:
                # local error of the midpoint rule scales as h**3
                halvings = max(1, math.ceil(math.log2(e / cfg.tol) / 3.0))
                s.n *= 2 ** halvings
                failed.append(s)
        pending = failed + rest
    return segs


def _segment_grid(segs):
    pts = [np.array([segs[0].a])] if segs else []
    for s in segs:
        pts.append(s.a + (s.b - s.a) * np.arange(1, s.n + 1) / s.n)
    return np.concatenate(pts) if pts else np.array([])


def propagator_over(system: NLevelSystem, pulse: PulseShape, t0: float, t1: float,
                    cfg: IntegratorConfig = DEFAULT_CONFIG) -> PropagatorMatrix:
    """Propagator ``U(t1, t0)``; the identity when ``t1 == t0``."""
    if t1 < t0:
        raise ValueError(f"need t1 >= t0, got t0={t0}, t1={t1}")
    n = system.n_levels
    u = np.eye(n, dtype=complex)
    if t1 == t0:
        return PropagatorMatrix(u, t0, t1, np.array([t0]))
    segs = _integrate(system, pulse, t0, t1, cfg)
    for s in segs:
        u = s.product @ u
    return PropagatorMatrix(u, t0, t1, _segment_grid(segs))


def monodromy(system: NLevelSystem, pulse: PulseShape,
              cfg: IntegratorConfig = DEFAULT_CONFIG) -> PropagatorMatrix:
    """``V = U(T, 0)`` over the full support of the pulse."""
    return propagator_over(system, pulse, 0.0, pulse.support, cfg)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def to_csv(self, path_or_file):
        n = self.states.shape[1]
        header = ["t"]
        header += [f"re_psi{j}" for j in range(n)]
        header += [f"im_psi{j}" for j in range(n)]
        header += [f"pop{j}" for j in range(n)]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t, psi in zip(self.times, self.states):
                row = [t, *psi.real, *psi.imag, *(np.abs(psi) ** 2)]
                w.writerow([f"{x:.17g}" for x in row])
        finally:
            if own:
                fh.close()


def propagate_state(system: NLevelSystem, pulse: PulseShape, psi0, t0: float, t1: float,
                    cfg: IntegratorConfig = DEFAULT_CONFIG, trajectory: bool = False):
    """State ``psi(t1)`` from ``psi(t0) = psi0``.

    With ``trajectory=True`` returns ``(psi, Trajectory)`` where the trajectory
    has one row per accepted step, starting at ``t0``.
    """
    if t1 < t0:
        raise ValueError(f"need t1 >= t0, got t0={t0}, t1={t1}")
    psi = np.array(psi0, dtype=complex)
    if t1 == t0:
        if trajectory:
            return psi, Trajectory(np.array([t0]), psi[None].copy())
        return psi
    segs = _integrate(system, pulse, t0, t1, cfg, keep_steps=trajectory)
    if not trajectory:
        for s in segs:
            psi = s.product @ psi
        return psi
    states = [psi]
    for s in segs:
        for u in s.steps:
            psi = u @ psi
            states.append(psi)
    return psi, Trajectory(_segment_grid(segs), np.array(states))


def step_grid(system: NLevelSystem, pulse: PulseShape, t0: float, t1: float,
              cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Accepted step boundaries the integrator would use on ``[t0, t1]``."""
    if t1 == t0:
        return np.array([t0])
    return _segment_grid(_integrate(system, pulse, t0, t1, cfg))


def trace_integral(system: NLevelSystem, pulse: PulseShape, grid) -> float:
    """``int tr H dt`` by 6-point Gauss-Legendre on every grid step.

    Nodes are interior to each step, so field jumps at grid points (pulse
    edges, copy boundaries) are handled exactly when they lie on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        return 0.0
    x, w = np.polynomial.legendre.leggauss(6)
    a, h = grid[:-1], np.diff(grid)
    t = a[:, None] + h[:, None] * (0.5 + 0.5 * x)[None, :]
    tr = (float(np.sum(system.energies))
          - complex(np.trace(system.dipole)).real * eval_field(pulse, t))
    return float(np.sum((tr @ (0.5 * w)) * h))


def global_phase_chi(system: NLevelSystem, pulse: PulseShape,
                     cfg: IntegratorConfig = DEFAULT_CONFIG, grid=None) -> float:
    """``chi = -1/2 int_0^T tr H dt``, so that ``det V = exp(2 i chi)``."""
    if grid is None:
        grid = step_grid(system, pulse, 0.0, pulse.support, cfg)
    return -0.5 * trace_integral(system, pulse, grid)
