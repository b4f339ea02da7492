"""Command-line front end: ``ste-entangle {evolve,sweep,figure,critical,period,validate}``.

Data commands write CSV (default) or JSON to ``--output`` (stdout when
omitted). Every file written is accompanied by ``<output>.manifest.json``;
passing that manifest back through ``--config`` replays the run.

Exit codes: 0 success, 2 configuration error, 3 validation tolerance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .analysis import DISCREPANCIES, ENTANGLED_TOL, VALIDATION_TOL, ZERO_TOL, Engine, GridSpec
from .dynamics import XState
from .entanglement import concurrence, negativity
from .hilbert import AtomBasisLabel, CouplingParams
from .reporting import (
    build_manifest,
    csv_bytes,
    json_bytes,
    manifest_path,
    table_json_bytes,
    write_atomic,
)

EXIT_CONFIG = 2
EXIT_TOLERANCE = 3

FIGURES = {
    "fig2a": ("ee", 1),
    "fig2b": ("ee", 3),
    "fig3a": ("eg", 3),
    "fig3b": ("eg", 1),
}
FIGURE_GAMMA = (0.0, 1.0, 101)
FIGURE_T = (0.0, 4 * math.pi, 401)

# keys never carried into a manifest's config
_RUNTIME_KEYS = {"command", "config", "output", "record_timing", "func"}


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--config", help="JSON file whose keys override the command-line flags")
    p.add_argument("--output", "-o", help="output path (stdout when omitted)")
    if data:
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--record-timing", action="store_true", help="add wall time to the manifest")


def _state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--case", default="ee", help="initial atomic product state: ee, eg, ge or gg")
    p.add_argument(
        "--state",
        help="general atomic state as four comma-separated complex amplitudes in (EE, EG, GE, GG) order",
    )
    p.add_argument("--n", type=int, default=0, help="initial photon number")


def _coupling_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--g-drv", type=float, default=1.0)
    p.add_argument("--g-stm", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None, help="(g_drv - g_stm) / (g_drv + g_stm)")


def _engine_args(p: argparse.ArgumentParser, default: str = "closed-form") -> None:
    p.add_argument("--engine", choices=[e.value for e in Engine], default=default)
    p.add_argument("--cutoff", type=int, default=None, help="oracle photon cutoff (default n + 6)")


def _time_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=4 * math.pi)
    p.add_argument("--t-steps", type=int, default=401)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ste-entangle", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="time series of A-E, concurrence and negativity")
    _common(p)
    _state_args(p)
    _coupling_args(p)
    _engine_args(p)
    _time_args(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="concurrence/negativity on a (gamma, t) grid")
    _common(p)
    _state_args(p)
    p.add_argument("--g-drv", type=float, default=1.0)
    _engine_args(p)
    _time_args(p)
    p.add_argument("--gamma-min", type=float, default=0.0)
    p.add_argument("--gamma-max", type=float, default=1.0)
    p.add_argument("--gamma-steps", type=int, default=101)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="regenerate a preset (gamma, t) grid")
    _common(p)
    p.add_argument("preset", choices=sorted(FIGURES))
    p.add_argument("--g-drv", type=float, default=1.0)
    _engine_args(p)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("critical", help="critical coupling point")
    _common(p, data=False)
    p.add_argument("--case", default="ee", choices=("ee", "eg", "ge"))
    p.add_argument("--n", type=int, default=0)
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("period", help="entanglement period")
    _common(p, data=False)
    _state_args(p)
    _coupling_args(p)
    _engine_args(p, default="oracle")
    p.add_argument("--method", choices=("zero-crossing", "analytic-xi"), default="zero-crossing")
    p.set_defaults(func=cmd_period)

    p = sub.add_parser("validate", help="closed forms and propagator versus the full-space oracle")
    _common(p, data=False)
    p.add_argument("--grid", help="grid JSON (defaults to the packaged standard grid)")
    p.add_argument("--tolerance", type=float, default=VALIDATION_TOL)
    p.set_defaults(func=cmd_validate)
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"cannot read {args.config}: {exc}") from None
    if isinstance(data, dict) and isinstance(data.get("config"), dict):
        data = data["config"]  # a run manifest
    if not isinstance(data, dict):
        raise ConfigError("config", "expected a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in _RUNTIME_KEYS:
            continue
        if not hasattr(args, dest):
            raise ConfigError(key, f"not a valid setting for '{args.command}'")
        setattr(args, dest, value)


def resolved_config(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _RUNTIME_KEYS}


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------


def _params(args) -> CouplingParams:
    g_drv = _positive(args, "g_drv")
    if args.g_stm is not None and args.gamma is not None:
        raise ConfigError("gamma", "give exactly one of g_stm and gamma")
    try:
        if args.gamma is not None:
            return CouplingParams.from_gamma(float(args.gamma), g_drv)
        return CouplingParams(g_drv, float(args.g_stm or 0.0))
    except ValueError as exc:
        raise ConfigError("gamma" if args.gamma is not None else "g_stm", str(exc)) from None


def _positive(args, name: str) -> float:
    value = float(getattr(args, name))
    if not (math.isfinite(value) and value > 0):
        raise ConfigError(name, "must be positive")
    return value


def _photons(args) -> int:
    if int(args.n) != args.n or args.n < 0:
        raise ConfigError("n", "must be a non-negative integer")
    return int(args.n)


def _initial(args):
    if getattr(args, "state", None):
        try:
            vec = np.array([complex(s.replace(" ", "")) for s in str(args.state).split(",")])
        except ValueError:
            raise ConfigError("state", "expected four comma-separated complex numbers") from None
        if vec.shape != (4,):
            raise ConfigError("state", "expected four amplitudes")
        if abs(np.vdot(vec, vec).real - 1.0) > 1e-12:
            raise ConfigError("state", "amplitudes must be normalized")
        return vec
    try:
        return AtomBasisLabel.parse(args.case)
    except ValueError as exc:
        raise ConfigError("case", str(exc)) from None


def _grid(args, prefix: str) -> np.ndarray:
    lo, hi, steps = (getattr(args, f"{prefix}_{k}") for k in ("min", "max", "steps"))
    if int(steps) != steps or steps < 1:
        raise ConfigError(f"{prefix}_steps", "must be a positive integer")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ConfigError(f"{prefix}_max", "grid bounds must be finite")
    if prefix == "t" and lo < 0:
        raise ConfigError("t_min", "must be non-negative")
    if hi < lo:
        raise ConfigError(f"{prefix}_max", f"must not be below {prefix}_min")
    if hi == lo or steps == 1:
        return np.array([float(lo)])
    return np.linspace(float(lo), float(hi), int(steps))


def _engine(args) -> Engine:
    engine = Engine(args.engine)
    if args.cutoff is not None and args.cutoff < _photons(args) + 4:
        raise ConfigError("cutoff", "must be at least n + 4")
    return engine


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _emit_table(args, header, rows, engine, notes) -> tuple[bytes, str | None, list]:
    data = csv_bytes(header, rows) if args.format == "csv" else table_json_bytes(header, rows)
    return data, engine, notes


def cmd_evolve(args):
    initial = _initial(args)
    n = _photons(args)
    params = _params(args)
    engine = _engine(args)
    times = _grid(args, "t")
    try:
        rho = analysis.reduced_series(initial, params, n, times, engine, args.cutoff)
    except ValueError as exc:
        raise ConfigError("engine", str(exc)) from None
    x = XState.from_matrix(rho)
    conc = concurrence(rho)
    neg = negativity(rho)
    rows = zip(times, x.A, x.B, x.C, x.D, x.E, conc, neg)
    header = ("t", "A", "B", "C", "D", "E", "concurrence", "negativity")
    return _emit_table(args, header, rows, engine.value, ["trace-over-fock-n"])


def _sweep_table(args, initial, n, gammas, times):
    engine = _engine(args)
    try:
        result = analysis.sweep(initial, n, gammas, times, engine, _positive(args, "g_drv"), args.cutoff)
    except ValueError as exc:
        raise ConfigError("gamma_min", str(exc)) from None
    header = ("gamma", "t", "concurrence", "negativity")
    return _emit_table(args, header, result.rows(), engine.value, ["trace-over-fock-n"])


def cmd_sweep(args):
    gammas = _grid(args, "gamma")
    if gammas[0] <= -1.0 or gammas[-1] > 1.0:
        raise ConfigError("gamma_min", "gamma grid must lie in (-1, 1]")
    return _sweep_table(args, _initial(args), _photons(args), gammas, _grid(args, "t"))


def cmd_figure(args):
    case, n = FIGURES[args.preset]
    args.case, args.n = case, n
    gammas = np.linspace(*FIGURE_GAMMA[:2], FIGURE_GAMMA[2])
    times = np.linspace(*FIGURE_T[:2], FIGURE_T[2])
    return _sweep_table(args, AtomBasisLabel.parse(case), n, gammas, times)


def cmd_critical(args):
    try:
        crit = analysis.critical_point(args.case, _photons(args))
    except ValueError as exc:
        raise ConfigError("case", str(exc)) from None
    doc = {"case": crit.case, "n": crit.n, "gamma_crit": crit.gamma_crit, "g_stm_crit": crit.g_stm_crit}
    return json_bytes(doc), None, []


def cmd_period(args):
    initial = _initial(args)
    if not isinstance(initial, AtomBasisLabel):
        raise ConfigError("state", "periods are defined for product initial states only")
    params = _params(args)
    engine = _engine(args)
    try:
        est = analysis.period(initial, params, _photons(args), args.method, engine)
    except ValueError as exc:
        raise ConfigError("method", str(exc)) from None
    doc = {
        "case": est.case,
        "n": est.n,
        "g_drv": params.g_drv,
        "g_stm": params.g_stm,
        "gamma": est.gamma,
        "method": est.method,
        "engine": engine.value if est.method == "zero-crossing" else None,
        "period": est.period,
        "reason": est.reason,
    }
    if "equal-coupling-period" in est.notes:
        ref = DISCREPANCIES["equal-coupling-period"]["reference_period"].get(str(est.n))
        if ref is not None:
            doc["reference_period"] = ref
    return json_bytes(doc), doc["engine"], list(est.notes)


def cmd_validate(args):
    grid = GridSpec.standard()
    if args.grid:
        try:
            grid = GridSpec.from_dict(json.loads(Path(args.grid).read_text()))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError("grid", f"cannot load grid: {exc}") from None
    report = analysis.validate_analytic(grid, tol=float(args.tolerance))
    args._passed = report.passed
    return json_bytes(report.to_dict()), Engine.ORACLE.value, list(report.notes)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        _apply_config(args)
        data, engine, notes = args.func(args)
    except ConfigError as exc:
        print(f"ste-entangle: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    elapsed = time.perf_counter() - start

    if args.output:
        config = resolved_config(args)
        config.pop("_passed", None)
        manifest = build_manifest(
            args.command,
            config,
            data,
            args.output,
            engine,
            {"entangled": ENTANGLED_TOL, "zero": ZERO_TOL, "validation": VALIDATION_TOL},
            {key: DISCREPANCIES[key]["summary"] for key in notes},
            elapsed if args.record_timing else None,
        )
        write_atomic(args.output, data)
        write_atomic(manifest_path(args.output), json_bytes(manifest))
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()

    if getattr(args, "_passed", True) is False:
        print("ste-entangle: validation deviations exceed tolerance", file=sys.stderr)
        return EXIT_TOLERANCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
