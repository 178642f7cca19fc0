"""Pulse-parameter search for PI / PSPI / PC / PSPC targets.

Free parameters are searched in the unit cube spanned by their bounds with
bounded Nelder-Mead, restarted from the leading points of an unscrambled
Halton sequence (index 1 onward; index 0 is the cube corner).
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import BudgetExhausted
from .model import NLevelSystem, PulseShape
from .nlevel import TransferReport, classify_transfer, effective_pair
from .propagation import DEFAULT_CONFIG, IntegratorConfig, monodromy, propagate_state
from .su2 import decompose_su2

MODES = ("PI", "PSPI", "PC", "PSPC")
PULSE_PARAMS = ("amplitude", "carrier", "duration", "phase")
TARGET_VALUE = 1e-12
SIMPLEX_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ControlProblem:
    """Inverse problem: find free pulse parameters that realize a target.

    ``free`` names pulse fields (``amplitude``, ``carrier``, ``duration``,
    ``phase``) or samples of a sampled pulse as ``sample:<index>``.
    """

    system: NLevelSystem
    template: PulseShape
    free: tuple
    bounds: tuple
    psi_i: np.ndarray
    psi_f: np.ndarray
    mode: str = "PI"
    beta: float = 0.0
    budget: int = 2000
    cfg: IntegratorConfig = DEFAULT_CONFIG

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        object.__setattr__(self, "psi_i", np.asarray(self.psi_i, dtype=complex))
        object.__setattr__(self, "psi_f", np.asarray(self.psi_f, dtype=complex))
        if not self.free:
            raise ValueError("at least one free parameter is required")
        if len(self.bounds) != len(self.free):
            raise ValueError("need one (lower, upper) bound per free parameter")
        for name, (lo, hi) in zip(self.free, self.bounds):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise ValueError(f"bad bounds for {name}: ({lo}, {hi})")
            if name not in PULSE_PARAMS and not name.startswith("sample:"):
                raise ValueError(f"unknown free parameter {name!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def lower(self):
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self):
        return np.array([b[1] for b in self.bounds])

    def pulse(self, params) -> PulseShape:
        changes = {}
        samples = None if self.template.samples is None else list(self.template.samples)
        for name, x in zip(self.free, params):
            if name.startswith("sample:"):
                samples[int(name.split(":", 1)[1])] = float(x)
            else:
                changes[name] = float(x)
        if samples is not None:
            changes["samples"] = tuple(samples)
        return self.template.with_params(**changes)


def _check_bounds(problem, params):
    p = np.asarray(params, dtype=float)
    slack = 1e-12 * np.maximum(1.0, np.abs(problem.upper))
    if np.any(p < problem.lower - slack) or np.any(p > problem.upper + slack):
        raise ValueError(f"parameters {p} outside bounds {problem.bounds}")
    return p


def objective(problem: ControlProblem, params) -> float:
    """Non-negative misfit; zero exactly when the target is met.

    Population modes: ``sum_j (|psi_j(T)|^2 - |psi_f,j|^2)^2``.
    Phase-selective modes: ``||psi(T) - exp(i beta) psi_f||^2``.
    """
    _check_bounds(problem, params)
    pulse = problem.pulse(params)
    psi = propagate_state(problem.system, pulse, problem.psi_i, 0.0, pulse.support, problem.cfg)
    if problem.mode in ("PI", "PC"):
        return float(np.sum((np.abs(psi) ** 2 - np.abs(problem.psi_f) ** 2) ** 2))
    return float(np.linalg.norm(psi - np.exp(1j * problem.beta) * problem.psi_f) ** 2)


def restart_points(d: int, count: int) -> np.ndarray:
    """Halton points 1..count in the unit cube (point 0 is skipped)."""
    sampler = qmc.Halton(d, scramble=False)
    return sampler.random(count + 1)[1:]


@dataclass
class OptimizeResult:
    best_params: dict
    best_value: float
    evaluations: int
    converged: bool
    pulse: PulseShape | None = None
    report: TransferReport | None = None
    extra: dict = field(default_factory=dict)


class _TargetReached(Exception):
    pass


def _run_restart(problem, u0, maxfev, target):
    lo, hi = problem.lower, problem.upper
    span = np.where(hi > lo, hi - lo, 1.0)
    best = {"value": math.inf, "u": np.array(u0), "nfev": 0}

    def f(u):
        u = np.clip(u, 0.0, 1.0)
        val = objective(problem, lo + span * u)
        best["nfev"] += 1
        if val < best["value"]:
            best["value"], best["u"] = val, u.copy()
        if val < target:
            raise _TargetReached
        return val

    converged = False
    try:
        res = minimize(f, u0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * len(u0),
                       options={"maxfev": maxfev, "xatol": SIMPLEX_TOL,
                                "fatol": math.inf, "adaptive": len(u0) > 2})
        converged = bool(res.status == 0)
    except _TargetReached:
        converged = True
    return best["value"], lo + span * best["u"], best["nfev"], converged


def optimize(problem: ControlProblem, restarts: int | None = None, threads: int = 1,
             target: float = TARGET_VALUE, period: float | None = None) -> OptimizeResult:
    """Best parameters found by restarted Nelder-Mead.

    ``2d + 1`` restarts by default, each allotted ``budget // restarts``
    evaluations.  Restarts run in order (in batches of ``threads``); the first
    one to reach ``target`` wins, otherwise the lowest objective (ties to the
    lower index).  Raises :class:`BudgetExhausted` carrying the best result
    when every restart ran out of evaluations without converging.
    """
    d = len(problem.free)
    n_restart = restarts if restarts is not None else 2 * d + 1
    seeds = restart_points(d, n_restart)
    per = max(1, problem.budget // n_restart)
    outcomes = []
    batch = max(1, threads)
    winner = None
    for lo in range(0, n_restart, batch):
        chunk = seeds[lo:lo + batch]
        if batch > 1:
            with ThreadPoolExecutor(batch) as ex:
                part = list(ex.map(lambda u: _run_restart(problem, u, per, target), chunk))
        else:
            part = [_run_restart(problem, chunk[0], per, target)]
        outcomes.extend(part)
        hits = [k for k, o in enumerate(outcomes) if o[0] < target]
        if hits:
            winner = hits[0]
            break
    if winner is None:
        winner = min(range(len(outcomes)), key=lambda k: (outcomes[k][0], k))
    value, params, _, _ = outcomes[winner]
    evaluations = sum(o[2] for o in outcomes)
    converged = any(o[3] for o in outcomes)
    result = OptimizeResult(dict(zip(problem.free, map(float, params))), float(value),
                            evaluations, converged)
    if not converged:
        raise BudgetExhausted(
            f"no restart converged within {problem.budget} evaluations; "
            f"best objective {value:.3e}", result)
    pulse = problem.pulse(params)
    v = monodromy(problem.system, pulse, problem.cfg).entries
    result.pulse = pulse
    result.report = classify_transfer(v, problem.psi_i, problem.psi_f,
                                      beta=problem.beta if problem.mode in ("PSPI", "PSPC") else None,
                                      period=period or pulse.support)
    result.extra["propagator"] = v
    return result


def scan_columns(problem: ControlProblem, names) -> list:
    n = problem.system.n_levels
    cols = list(names) + [f"pop{j}" for j in range(n)]
    cols += ["delta", "spacing_residual", "sufficient", "block_residual", "objective"]
    return cols


def _scan_row(problem, names, values):
    pulse = problem.template
    changes = dict(zip(names, values))
    sub = ControlProblem(problem.system, pulse, tuple(names), tuple((v, v) for v in values),
                         problem.psi_i, problem.psi_f, problem.mode, problem.beta,
                         problem.budget, problem.cfg)
    pulse = sub.pulse(values)
    v = monodromy(problem.system, pulse, problem.cfg).entries
    out = v @ problem.psi_i
    pops = np.abs(out) ** 2
    n = problem.system.n_levels
    delta = decompose_su2(v).delta if n == 2 else None
    crit, suff, resid = effective_pair(v, problem.psi_i, problem.psi_f, pulse.support or 1.0)
    if problem.mode in ("PI", "PC"):
        obj = float(np.sum((pops - np.abs(problem.psi_f) ** 2) ** 2))
    else:
        obj = float(np.linalg.norm(out - np.exp(1j * problem.beta) * problem.psi_f) ** 2)
    row = dict(changes)
    row.update({f"pop{j}": float(p) for j, p in enumerate(pops)})
    row["delta"] = delta
    row["spacing_residual"] = None if crit is None else crit.residual
    row["sufficient"] = None if suff is None else int(suff.is_pi_rotation)
    row["block_residual"] = resid if n > 2 else None
    row["objective"] = obj
    return row


def scan(problem: ControlProblem, grid: dict, threads: int = 1) -> list:
    """Evaluate diagnostics on the Cartesian product of per-parameter grids.

    Rows come in lexicographic order of grid indices (last parameter fastest).
    """
    names = list(grid)
    axes = [np.atleast_1d(np.asarray(grid[k], dtype=float)) for k in names]
    if any(len(a) < 1 for a in axes):
        raise ValueError("every grid axis needs at least one point")
    points = list(itertools.product(*axes))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(lambda p: _scan_row(problem, names, p), points))
    return [_scan_row(problem, names, p) for p in points]


def write_scan_csv(rows: list, columns: list, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if row[c] is None else f"{row[c]:.17g}" if isinstance(row[c], float)
                    else row[c] for c in columns])
