"""Command-line front end.

Every subcommand reads a YAML run configuration (see :mod:`floquetpi.config`)
and writes a YAML report that starts with the fully resolved configuration.
Table-shaped results (trajectories, quasienergies, scans) are CSV with a
header row.  With ``--out`` the primary output goes to that file and the
report to stdout.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 optimization budget exhausted.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np
import scipy.linalg

from . import __version__
from .adiabatic import adiabatic_criterion, adiabatic_errors, adiabatic_sweep
from .config import ConfigError, RunConfig, dump_yaml, format_float, load_config, pulse_fragment
from .control import ControlProblem, optimize, scan, scan_columns, write_scan_csv
from .errors import BudgetExhausted, DegenerateEigenvectors, FloquetPIError
from .floquet import floquet_spectrum, inversion_criterion, rational_approx
from .nlevel import block_residual, build_rotation, classify_transfer, rotated
from .propagation import monodromy, propagate_state
from .su2 import decompose_su2, eigensystem_2ls, pi_angle_check, sufficient_pi_check

THREADS_ENV = "FLOQUETPI_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_BUDGET = 0, 2, 3, 4


# ---------------------------------------------------------------- helpers

def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return format_float(float(x))
    return str(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cplx(z):
    return [float(np.real(z)), float(np.imag(z))]


def _matrix_out(m):
    m = np.asarray(m)
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


def _require(value, key, why):
    if value is None:
        raise ConfigError(f"{key}: missing ({why})")
    return value


def _propagator(run: RunConfig):
    """Explicit ``propagator`` section if present, else the pulse monodromy."""
    if run.propagator is not None:
        return run.propagator
    pulse = _require(run.pulse, "pulse", "needed to compute the propagator")
    return monodromy(run.system, pulse, run.integrator).entries


def _period(run: RunConfig) -> float:
    fl = run.section("floquet")
    if "period" in fl:
        try:
            return float(fl["period"])
        except (TypeError, ValueError):
            raise ConfigError(f"floquet.period: expected a number, got {fl['period']!r}") from None
    if run.pulse is not None and run.pulse.support > 0:
        return run.pulse.support
    raise ConfigError("floquet.period: missing (no pulse with nonzero duration to take it from)")


def _levels(run: RunConfig):
    return run.target.levels if run.target.levels is not None else (0, 1)


def _threads(args, run: RunConfig) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            k = int(env)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {env!r}") from None
        if k < 1:
            raise ConfigError(f"{THREADS_ENV}: expected a positive integer, got {env!r}")
        return k
    return int(run.resolved.get("threads", 1))


def _two_level_analysis(u, period, tol):
    p = decompose_su2(u)
    angle = pi_angle_check(p.delta, tol)
    eig = eigensystem_2ls(u)
    try:
        suff = sufficient_pi_check(eig, tol)
        suff_out = {"is_pi_rotation": suff.is_pi_rotation, "alpha": suff.alpha,
                    "deviation": suff.deviation}
    except DegenerateEigenvectors as exc:
        suff_out = {"is_pi_rotation": None, "alpha": None, "degenerate": str(exc)}
    crit = inversion_criterion(floquet_spectrum(u, period), 0, 1, tol)
    return {
        "chi": p.chi, "delta1": p.delta1, "delta2": p.delta2, "delta": p.delta,
        "delta_is_pi": angle.is_pi, "delta_k": angle.k, "delta_distance": angle.distance,
        "zeta1": _cplx(eig.zeta1), "zeta2": _cplx(eig.zeta2),
        "eigenvectors": _matrix_out(eig.vectors),
        "sufficient": suff_out,
        "criterion": {"satisfied": crit.satisfied, "n": crit.n, "residual": crit.residual,
                      "phase": crit.phase},
    }


# ---------------------------------------------------------------- commands
# Each returns (result dict, primary CSV text or None, exit code).

def cmd_propagate(run: RunConfig, args):
    pulse = _require(run.pulse, "pulse", "propagate needs a pulse")
    psi0 = _require(run.target.psi_i, "target.initial", "propagate needs an initial state")
    psi, traj = propagate_state(run.system, pulse, psi0, 0.0, pulse.support,
                                run.integrator, trajectory=True)
    buf = io.StringIO()
    traj.to_csv(buf)
    result = {"t_final": pulse.support, "rows": len(traj.times),
              "final_state": {"real": psi.real.tolist(), "imag": psi.imag.tolist()},
              "populations": (np.abs(psi) ** 2).tolist(),
              "norm": float(np.linalg.norm(psi))}
    return result, buf.getvalue(), EXIT_OK


def cmd_floquet(run: RunConfig, args):
    v = _propagator(run)
    period = _period(run)
    spec = floquet_spectrum(v, period)
    n = run.system.n_levels
    m_max = int(run.section("floquet").get("m_max", 12))
    ra = rational_approx(spec, m_max)
    spacings = {f"{i}-{f}": float((spec.quasienergies[f] - spec.quasienergies[i]) * period)
                for i in range(n) for f in range(i + 1, n)}
    result = {"period": period, "omega0": spec.omega0,
              "quasienergies": spec.quasienergies.tolist(), "q": spec.q.tolist(),
              "phase_spacings": spacings,
              "rational": {"kind": ra.kind, "m": ra.m,
                           "numerators": None if ra.numerators is None else list(ra.numerators)}}
    if run.target.levels is not None:
        i, f = run.target.levels
        crit = inversion_criterion(spec, i, f, run.target.tol)
        result["criterion"] = {"levels": [i, f], "satisfied": crit.satisfied, "n": crit.n,
                               "residual": crit.residual, "phase": crit.phase}
    rows = [(j, spec.quasienergies[j], spec.q[j]) for j in range(n)]
    return result, _csv_text(["j", "omega", "q"], rows), EXIT_OK


def cmd_analyze(run: RunConfig, args):
    v = _propagator(run)
    period = _period(run)
    tol = run.target.tol
    result = {}
    if v.shape == (2, 2):
        u = v
    else:
        t = run.target
        psi_i = _require(t.psi_i, "target.initial", "N > 2 analysis reduces to the initial/final pair")
        psi_f = _require(t.psi_f, "target.final", "N > 2 analysis reduces to the initial/final pair")
        w = rotated(v, build_rotation(psi_i, psi_f))
        result["block_residual"] = block_residual(w)
        u, _ = scipy.linalg.polar(w[:2, :2])
    result.update(_two_level_analysis(u, period, tol))
    row = [result["delta"], int(result["delta_is_pi"]), result["criterion"]["residual"],
           result["sufficient"]["is_pi_rotation"], result["sufficient"].get("alpha"),
           result.get("block_residual")]
    csv_text = _csv_text(["delta", "delta_is_pi", "spacing_residual", "sufficient", "alpha",
                          "block_residual"], [row])
    return result, csv_text, EXIT_OK


def cmd_classify(run: RunConfig, args):
    t = run.target
    psi_i = _require(t.psi_i, "target.initial", "classify needs an initial state")
    psi_f = _require(t.psi_f, "target.final", "classify needs a final state")
    v = _propagator(run)
    rep = classify_transfer(v, psi_i, psi_f, t.tol, t.beta, _period(run))
    result = {"label": rep.label(), "orthogonal": rep.orthogonal,
              "populations_final": rep.populations_final.tolist(),
              "fidelity_pspi": rep.fidelity_pspi, "phase": rep.phase,
              "flags": dict(rep.flags), "residuals": dict(rep.residuals),
              "block_residual": rep.block_residual}
    if rep.criterion is not None:
        result["criterion"] = {"satisfied": rep.criterion.satisfied, "n": rep.criterion.n,
                               "residual": rep.criterion.residual}
    if rep.sufficient is not None:
        result["sufficient"] = {"is_pi_rotation": rep.sufficient.is_pi_rotation,
                                "alpha": rep.sufficient.alpha,
                                "deviation": rep.sufficient.deviation}
    n = run.system.n_levels
    header = ["label"] + [f"pop{j}" for j in range(n)] + [
        "PI", "PSPI", "PC", "PSPC", "population_residual", "phase_residual",
        "spacing_residual", "sufficient", "block_residual"]
    pop_key, phase_key = ("PI", "PSPI") if rep.orthogonal else ("PC", "PSPC")
    row = [rep.label(), *rep.populations_final, *(rep.flags[k] for k in ("PI", "PSPI", "PC", "PSPC")),
           rep.residuals[pop_key], rep.residuals[phase_key],
           None if rep.criterion is None else rep.criterion.residual,
           None if rep.sufficient is None else rep.sufficient.is_pi_rotation,
           rep.block_residual]
    return result, _csv_text(header, [row]), EXIT_OK


def cmd_adiabatic(run: RunConfig, args):
    pulse = _require(run.pulse, "pulse", "adiabatic analysis needs a pulse")
    i, f = _levels(run)
    sweep = adiabatic_sweep(run.system, pulse, run.integrator, threads=_threads(args, run))
    crit = adiabatic_criterion(run.system, pulse, i, f, run.integrator, sweep=sweep)
    result = {"levels": [i, f], "periods": sweep.decomposition.n_periods,
              "integral": crit.integral, "integral_over_pi": crit.integral / np.pi,
              "nearest_odd_multiple": crit.nearest_odd_pi, "residual": crit.residual}
    if run.section("adiabatic").get("errors", False):
        exact = monodromy(run.system, pulse, run.integrator).entries
        result["errors"] = adiabatic_errors(run.system, pulse, exact, run.integrator, sweep=sweep)
    n = run.system.n_levels
    d = sweep.decomposition.durations
    rows = [(p, d[p], *sweep.quasienergies[p]) for p in range(len(d))]
    return result, _csv_text(["p", "d_p"] + [f"omega{j}" for j in range(n)], rows), EXIT_OK


def _control_problem(run: RunConfig, free, bounds, budget):
    t = run.target
    pulse = _require(run.pulse, "pulse", "a pulse template is required")
    psi_i = _require(t.psi_i, "target.initial", "control needs an initial state")
    psi_f = _require(t.psi_f, "target.final", "control needs a final state")
    try:
        return ControlProblem(run.system, pulse, tuple(free), tuple(bounds), psi_i, psi_f,
                              t.mode, 0.0 if t.beta is None else t.beta, budget, run.integrator)
    except ValueError as exc:
        raise ConfigError(f"optimize: {exc}") from None


def cmd_optimize(run: RunConfig, args):
    sec = run.section("optimize")
    free = _require(sec.get("free"), "optimize.free", "list of parameter names")
    bounds = _require(sec.get("bounds"), "optimize.bounds", "one [lower, upper] per parameter")
    if not isinstance(free, list) or not isinstance(bounds, list):
        raise ConfigError("optimize.free: expected lists for free and bounds")
    try:
        bounds = [(float(lo), float(hi)) for lo, hi in bounds]
        budget = int(sec.get("budget", 2000))
        restarts = None if sec.get("restarts") is None else int(sec["restarts"])
        target_value = float(sec.get("target", 1e-12))
    except (TypeError, ValueError):
        raise ConfigError("optimize.bounds: expected [[lower, upper], ...] and numeric settings") from None
    problem = _control_problem(run, free, bounds, budget)
    code = EXIT_OK
    try:
        res = optimize(problem, restarts, _threads(args, run), target_value)
    except BudgetExhausted as exc:
        res, code = exc.result, EXIT_BUDGET
    result = {"status": "converged" if code == EXIT_OK else "budget_exhausted",
              "best_params": res.best_params, "best_value": res.best_value,
              "evaluations": res.evaluations}
    if res.report is not None:
        rep = res.report
        result["label"] = rep.label()
        result["populations_final"] = rep.populations_final.tolist()
        result["residuals"] = dict(rep.residuals)
        result["criterion_residual"] = None if rep.criterion is None else rep.criterion.residual
        result["sufficient"] = None if rep.sufficient is None else rep.sufficient.is_pi_rotation
        result["block_residual"] = rep.block_residual
    result["fragment"] = pulse_fragment(problem.pulse(list(res.best_params.values())))
    return result, None, code


def _grid_axis(spec, key):
    if isinstance(spec, list):
        return [float(x) for x in spec]
    if isinstance(spec, dict) and {"start", "stop", "num"} <= set(spec):
        num = int(spec["num"])
        if num < 1:
            raise ConfigError(f"{key}.num: must be >= 1")
        return np.linspace(float(spec["start"]), float(spec["stop"]), num).tolist()
    raise ConfigError(f"{key}: expected a list of values or {{start, stop, num}}")


def cmd_scan(run: RunConfig, args):
    sec = run.section("scan")
    grid_spec = _require(sec.get("grid"), "scan.grid", "mapping of parameter -> values")
    if not isinstance(grid_spec, dict) or not grid_spec:
        raise ConfigError("scan.grid: expected a non-empty mapping")
    try:
        grid = {k: _grid_axis(v, f"scan.grid.{k}") for k, v in grid_spec.items()}
    except (TypeError, ValueError):
        raise ConfigError("scan.grid: values must be numeric") from None
    bounds = [(min(v), max(v)) for v in grid.values()]
    problem = _control_problem(run, list(grid), bounds, 1)
    rows = scan(problem, grid, _threads(args, run))
    cols = scan_columns(problem, list(grid))
    buf = io.StringIO()
    write_scan_csv(rows, cols, buf)
    best = min(range(len(rows)), key=lambda k: (rows[k]["objective"], k))
    result = {"rows": len(rows), "columns": cols, "best_row": best,
              "best": {c: rows[best][c] for c in cols}}
    return result, buf.getvalue(), EXIT_OK


COMMANDS = {
    "propagate": (cmd_propagate, "propagate the initial state; trajectory CSV", True),
    "floquet": (cmd_floquet, "quasienergies, spacings and inversion criterion", False),
    "analyze": (cmd_analyze, "U(2) parameters, eigensystem and PI tests", False),
    "classify": (cmd_classify, "classify the transfer initial -> final", False),
    "adiabatic": (cmd_adiabatic, "period-by-period quasienergies and adiabatic criterion", False),
    "optimize": (cmd_optimize, "search pulse parameters for the target", False),
    "scan": (cmd_scan, "grid scan of pulse parameters; CSV", True),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="YAML run configuration")
    common.add_argument("--out", metavar="PATH", help="write the primary output to PATH")
    common.add_argument("--csv", action="store_true", help="emit CSV instead of the YAML report")
    common.add_argument("--tol", type=float, metavar="X", help="override integrator.tol")
    common.add_argument("--threads", type=int, metavar="K",
                        help=f"worker threads (default: ${THREADS_ENV}, then config, then 1)")
    parser = argparse.ArgumentParser(prog="floquetpi", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text, _) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text, description=help_text)
    return parser


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    func, _, csv_native = COMMANDS[args.command]
    try:
        run = load_config(args.config, args.tol)
        result, csv_text, code = func(run, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloquetPIError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    report = dump_yaml({"command": args.command, "config": run.resolved, "result": result})
    want_csv = csv_text is not None and (csv_native or args.csv)
    if want_csv:
        _write(args.out, csv_text)
        if args.out is not None:
            sys.stdout.write(report)
    else:
        _write(args.out, report)
    return code


if __name__ == "__main__":
    sys.exit(main())
