"""YAML run configuration.

Example::

    system:
      energies: [0.0, 1.0]
      dipole: [[0, 1], [1, 0]]
      dipole_imag: [[0, 0], [0, 0]]     # optional
    pulse:
      kind: rectangular                 # gaussian | sin2 | sampled
      amplitude: 0.005
      carrier: 1.0
      duration: 628.3185307179586
      phase: 0.0                        # optional
      samples: [0, 0.5, 1, 0.5, 0]      # sampled only
      repeats: 1                        # optional
    integrator: {step_init: 0.1, tol: 1.0e-10, max_steps: 5000000}
    target:
      initial: [1, 0]
      final: [0, 1]                     # *_imag lists optional
      mode: PI                          # PI | PSPI | PC | PSPC
      beta: 0.0                         # optional, pins the PSPI/PSPC phase
      levels: [0, 1]                    # (i, f) for level-resolved criteria
      tol: 1.0e-6
    propagator: {real: [[...]], imag: [[...]]}   # optional explicit V
    floquet: {m_max: 12}
    adiabatic: {errors: false}
    optimize: {free: [amplitude], bounds: [[0.004, 0.006]], budget: 2000, restarts: 3}
    scan: {grid: {amplitude: {start: 0.004, stop: 0.006, num: 5}}}
    threads: 1

Every failure raises :class:`~floquetpi.errors.ConfigError` whose message
starts with the dotted key of the offending entry.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .errors import ConfigError, DimensionMismatch, HermiticityViolation
from .model import PULSE_KINDS, NLevelSystem, PulseShape, validate_system
from .propagation import IntegratorConfig

TOP_LEVEL = ("system", "pulse", "integrator", "target", "propagator", "floquet",
             "adiabatic", "optimize", "scan", "threads")
NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Target:
    psi_i: np.ndarray | None
    psi_f: np.ndarray | None
    mode: str
    beta: float | None
    levels: tuple | None
    tol: float


@dataclass(frozen=True, eq=False)
class RunConfig:
    system: NLevelSystem
    pulse: PulseShape | None
    integrator: IntegratorConfig
    target: Target
    propagator: np.ndarray | None
    raw: dict
    resolved: dict

    def section(self, name: str) -> dict:
        return self.resolved.get(name) or {}


def _fail(key, msg):
    raise ConfigError(f"{key}: {msg}")


def _mapping(d, key):
    if d is None:
        return {}
    if not isinstance(d, dict):
        _fail(key, f"expected a mapping, got {type(d).__name__}")
    return d


def _number(v, key):
    if isinstance(v, bool):
        _fail(key, "expected a number, got a boolean")
    try:
        x = float(v)
    except (TypeError, ValueError):
        _fail(key, f"expected a number, got {v!r}")
    if not np.isfinite(x):
        _fail(key, f"must be finite, got {v!r}")
    return x


def _integer(v, key, minimum=None):
    x = _number(v, key)
    if x != int(x):
        _fail(key, f"expected an integer, got {v!r}")
    if minimum is not None and x < minimum:
        _fail(key, f"must be >= {minimum}, got {int(x)}")
    return int(x)


def _vector(v, key, n=None):
    if not isinstance(v, (list, tuple)) or not v:
        _fail(key, "expected a non-empty list of numbers")
    out = np.array([_number(x, f"{key}[{k}]") for k, x in enumerate(v)])
    if n is not None and len(out) != n:
        _fail(key, f"expected {n} entries, got {len(out)}")
    return out


def _matrix(v, key, n):
    if not isinstance(v, (list, tuple)) or len(v) != n:
        _fail(key, f"expected {n} rows")
    return np.array([_vector(row, f"{key}[{k}]", n) for k, row in enumerate(v)])


def _complex_vector(sec, name, key, n):
    re = _vector(sec[name], f"{key}.{name}", n)
    im = _vector(sec[name + "_imag"], f"{key}.{name}_imag", n) if name + "_imag" in sec else 0.0
    psi = re + 1j * im
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_TOL:
        _fail(f"{key}.{name}", f"state must be normalized, |psi| = {norm:.17g}")
    return psi


def _unknown(d, allowed, key):
    for k in d:
        if k not in allowed:
            _fail(f"{key}.{k}" if key else k, "unknown key")


def _system(d):
    d = _mapping(d, "system")
    _unknown(d, ("energies", "dipole", "dipole_imag"), "system")
    for k in ("energies", "dipole"):
        if k not in d:
            _fail(f"system.{k}", "missing")
    eps = _vector(d["energies"], "system.energies")
    n = len(eps)
    mu = _matrix(d["dipole"], "system.dipole", n).astype(complex)
    if "dipole_imag" in d:
        mu = mu + 1j * _matrix(d["dipole_imag"], "system.dipole_imag", n)
    try:
        sysm = validate_system(NLevelSystem(eps, mu))
    except (HermiticityViolation, DimensionMismatch, ValueError) as exc:
        _fail("system.dipole", str(exc))
    resolved = {"energies": eps.tolist(), "dipole": mu.real.tolist(), "dipole_imag": mu.imag.tolist()}
    return sysm, resolved


def _pulse(d):
    d = _mapping(d, "pulse")
    _unknown(d, ("kind", "amplitude", "carrier", "duration", "phase", "samples", "repeats"), "pulse")
    kind = d.get("kind", "rectangular")
    if kind not in PULSE_KINDS:
        _fail("pulse.kind", f"expected one of {PULSE_KINDS}, got {kind!r}")
    vals = {}
    for k, default in (("amplitude", None if kind != "sampled" else 1.0), ("carrier", None),
                       ("duration", None), ("phase", 0.0)):
        if k not in d and default is None:
            _fail(f"pulse.{k}", "missing")
        vals[k] = _number(d.get(k, default), f"pulse.{k}")
    if vals["duration"] < 0:
        _fail("pulse.duration", "must be >= 0")
    if vals["carrier"] < 0:
        _fail("pulse.carrier", "must be >= 0")
    repeats = _integer(d.get("repeats", 1), "pulse.repeats", 1)
    samples = None
    if kind == "sampled":
        if "samples" not in d:
            _fail("pulse.samples", "missing (required for kind: sampled)")
        samples = tuple(_vector(d["samples"], "pulse.samples").tolist())
        if len(samples) < 2:
            _fail("pulse.samples", "need at least 2 samples")
    elif "samples" in d:
        _fail("pulse.samples", f"only allowed for kind: sampled, not {kind}")
    pulse = PulseShape(kind, samples=samples, repeats=repeats, **vals)
    resolved = {"kind": kind, **vals, "repeats": repeats}
    if samples is not None:
        resolved["samples"] = list(pulse.samples)
    return pulse, resolved


def _integrator(d, tol_override):
    d = _mapping(d, "integrator")
    _unknown(d, ("step_init", "tol", "max_steps"), "integrator")
    base = IntegratorConfig()
    step = _number(d.get("step_init", base.step_init), "integrator.step_init")
    tol = _number(d.get("tol", base.tol), "integrator.tol")
    if tol_override is not None:
        tol = float(tol_override)
    max_steps = _integer(d.get("max_steps", base.max_steps), "integrator.max_steps", 1)
    try:
        cfg = IntegratorConfig(step, tol, max_steps)
    except ValueError as exc:
        _fail("integrator", str(exc))
    return cfg, {"step_init": step, "tol": tol, "max_steps": max_steps}


def _target(d, n):
    d = _mapping(d, "target")
    _unknown(d, ("initial", "initial_imag", "final", "final_imag", "mode", "beta", "levels", "tol"),
             "target")
    psi_i = _complex_vector(d, "initial", "target", n) if "initial" in d else None
    psi_f = _complex_vector(d, "final", "target", n) if "final" in d else None
    mode = d.get("mode", "PI")
    if mode not in ("PI", "PSPI", "PC", "PSPC"):
        _fail("target.mode", f"expected PI, PSPI, PC or PSPC, got {mode!r}")
    beta = None if d.get("beta") is None else _number(d["beta"], "target.beta")
    levels = None
    if "levels" in d:
        lv = d["levels"]
        if not isinstance(lv, (list, tuple)) or len(lv) != 2:
            _fail("target.levels", "expected [i, f]")
        levels = tuple(_integer(x, f"target.levels[{k}]", 0) for k, x in enumerate(lv))
        if max(levels) >= n or levels[0] == levels[1]:
            _fail("target.levels", f"need two distinct levels below {n}, got {list(levels)}")
    tol = _number(d.get("tol", 1e-6), "target.tol")
    if tol <= 0:
        _fail("target.tol", "must be > 0")
    resolved = {"mode": mode, "beta": beta, "tol": tol,
                "levels": None if levels is None else list(levels)}
    for name, psi in (("initial", psi_i), ("final", psi_f)):
        if psi is not None:
            resolved[name] = psi.real.tolist()
            resolved[name + "_imag"] = psi.imag.tolist()
    return Target(psi_i, psi_f, mode, beta, levels, tol), resolved


def _propagator(d, n):
    if d is None:
        return None, None
    d = _mapping(d, "propagator")
    _unknown(d, ("real", "imag"), "propagator")
    if "real" not in d:
        _fail("propagator.real", "missing")
    v = _matrix(d["real"], "propagator.real", n).astype(complex)
    if "imag" in d:
        v = v + 1j * _matrix(d["imag"], "propagator.imag", n)
    return v, {"real": v.real.tolist(), "imag": v.imag.tolist()}


def parse_config(data: dict, tol_override: float | None = None) -> RunConfig:
    """Validate a config mapping; fills defaults into ``resolved``."""
    data = _mapping(data, "<root>")
    _unknown(data, TOP_LEVEL, "")
    if "system" not in data:
        _fail("system", "missing")
    system, r_sys = _system(data["system"])
    n = system.n_levels
    pulse, r_pulse = (None, None)
    if "pulse" in data:
        pulse, r_pulse = _pulse(data["pulse"])
    cfg, r_int = _integrator(data.get("integrator"), tol_override)
    target, r_tgt = _target(data.get("target"), n)
    v, r_prop = _propagator(data.get("propagator"), n)
    resolved = {"system": r_sys, "pulse": r_pulse, "integrator": r_int, "target": r_tgt}
    if r_prop is not None:
        resolved["propagator"] = r_prop
    for k in ("floquet", "adiabatic", "optimize", "scan"):
        if k in data:
            resolved[k] = _mapping(data[k], k)
    if "threads" in data:
        resolved["threads"] = _integer(data["threads"], "threads", 1)
    return RunConfig(system, pulse, cfg, target, v, data, resolved)


def load_config(path, tol_override: float | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "?"
        raise ConfigError(f"{path}: YAML syntax error at {where}") from exc
    return parse_config(data, tol_override)


def pulse_fragment(pulse: PulseShape) -> dict:
    """``pulse:`` section reproducing ``pulse``; can be pasted into a config."""
    out = {"kind": pulse.kind, "amplitude": pulse.amplitude, "carrier": pulse.carrier,
           "duration": pulse.duration, "phase": pulse.phase, "repeats": pulse.repeats}
    if pulse.samples is not None:
        out["samples"] = list(pulse.samples)
    return {"pulse": out}


def format_float(x: float) -> str:
    """17 significant digits, always recognisable as a float."""
    s = f"{x:.17g}"
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


class _Dumper(yaml.SafeDumper):
    pass


def _float_repr(dumper, x):
    if not np.isfinite(x):
        text = ".nan" if np.isnan(x) else (".inf" if x > 0 else "-.inf")
    else:
        text = format_float(x)
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


_Dumper.add_representer(float, _float_repr)


def dump_yaml(data) -> str:
    return yaml.dump(_plain(data), Dumper=_Dumper, sort_keys=False,
                     default_flow_style=None, width=100)


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    return x
