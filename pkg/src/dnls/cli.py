"""Command-line entry point: ``dnls <subcommand> [--config PATH] [--out DIR]``."""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from . import __version__
from .checks import CHECKS, run_all
from .experiments import (
    PreconditionError,
    run_blowup_probe,
    run_confined_decay,
    run_energy_monotonicity,
    run_scattering,
    run_torus_decay,
)
from .grid import sample_initial
from .io import (
    ConfigError,
    ExperimentConfig,
    checkpoint,
    config_from_pairs,
    parse_config,
    report_envelope,
    write_json,
    write_series,
)
from .params import PhysicsParams
from .propagator import Termination, evolve
from .regimes import classify

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_WATCHDOG = 3
EXIT_CHECK_FAILED = 4


def _log(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def execute(cfg: ExperimentConfig, kind: str, out: Optional[Path]) -> tuple[dict, int]:
    """Run one experiment, write its artifacts under ``out`` and return (report, exit code)."""
    p, g, st = cfg.physics, cfg.grid, cfg.stepping
    series = None
    code = EXIT_OK
    if kind == "run":
        u0 = sample_initial(g, cfg.initial)
        traj = evolve(u0, p, st)
        series = traj.series
        body = {
            "termination": traj.termination.value,
            "termination_time": traj.termination_time,
            "final_time": traj.final.time,
            "meta": traj.meta,
        }
        if out is not None:
            checkpoint(traj.final, out / "final.dnls")
        if traj.termination is Termination.BLOWUP_SUSPECTED:
            code = EXIT_WATCHDOG
    elif kind == "decay":
        rep = run_confined_decay(p, g, st, cfg.initial)
        body, series = rep.to_dict(), rep.series
    elif kind == "torus":
        rep = run_torus_decay(p, g, st, cfg.initial)
        body, series = rep.to_dict(), rep.series
    elif kind == "scatter":
        rep = run_scattering(p, g, cfg.t_ladder, st.dt, cfg.initial)
        body = rep.to_dict()
    elif kind == "energy":
        rep = run_energy_monotonicity(p, g, st, cfg.kappa, cfg.initial)
        body, series = rep.to_dict(), rep.series
    elif kind == "blowup":
        rep = run_blowup_probe(p, g, st, cfg.initial)
        body, series = rep.to_dict(), rep.series
    elif kind == "classify":
        body = classify(p, g.dim).to_dict()
    else:
        raise ConfigError(f"experiment: {kind!r} cannot be executed directly")
    report = report_envelope(cfg, {"experiment": kind, **body})
    if out is not None:
        write_json(report, out / "report.json")
        if series is not None:
            write_series(series, out / "series.csv")
    return report, code


def _load(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config: required for this subcommand")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"--config: cannot read {args.config}: {e.strerror}") from None
    return parse_config(text)


def _out_dir(args, cfg: Optional[ExperimentConfig]) -> Path:
    if args.out:
        return Path(args.out)
    return Path(cfg.output_dir if cfg is not None else "out")


def cmd_classify(args) -> int:
    inline = [args.lam, args.a, args.sigma1, args.sigma2, args.dim]
    if args.config:
        cfg = _load(args)
        verdict = classify(cfg.physics, cfg.grid.dim)
    elif all(v is not None for v in inline):
        if args.dim not in (1, 2, 3):
            raise ConfigError(f"--dim: must be 1, 2 or 3, got {args.dim}")
        if args.a < 0:
            raise ConfigError(f"--a: damping must be >= 0, got {args.a}")
        if args.sigma1 <= 0 or args.sigma2 <= 0:
            raise ConfigError("--sigma1/--sigma2: must be > 0")
        params = PhysicsParams(args.lam, args.a, args.sigma1, args.sigma2, (0.0,) * args.dim)
        verdict = classify(params, args.dim)
    else:
        missing = [f for f, v in zip(("--lambda", "--a", "--sigma1", "--sigma2", "--dim"), inline) if v is None]
        raise ConfigError(f"{missing[0]}: required without --config")
    print(json.dumps({"version": __version__, **verdict.to_dict()}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _load(args)
    kind = args.command
    if cfg.experiment != kind:
        _log(args, f"note: config says experiment = {cfg.experiment}, running {kind}")
    out = _out_dir(args, cfg)
    report, code = execute(cfg, kind, out)
    if not args.quiet:
        print(json.dumps(report["report"], indent=2, sort_keys=True, default=str))
    _log(args, f"wrote {out}")
    return code


def cmd_check(args) -> int:
    names = args.only or list(CHECKS)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ConfigError(f"--only: unknown check {unknown[0]!r}; choose from {', '.join(CHECKS)}")
    results = run_all(names, report=None if args.quiet else lambda r: print(r.line(), flush=True))
    ok = all(r.passed for r in results)
    if args.out:
        write_json(
            report_envelope(None, {"experiment": "check", "passed": ok, "checks": [r.to_dict() for r in results]}),
            Path(args.out) / "check.json",
        )
    if args.quiet:
        for r in results:
            if not r.passed:
                print(r.line())
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def sweep_cells(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Cartesian product of the sweep axes, each cell a fully validated config."""
    base = {k: v for k, v in cfg.raw.items() if not k.startswith("sweep")}
    base["experiment"] = cfg.sweep_experiment
    axes = sorted(cfg.sweep_axes.items())
    cells = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        pairs = dict(base)
        for (k, _), v in zip(axes, combo):
            pairs[k] = v
        cells.append(config_from_pairs(pairs))
    return cells


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.experiment != "sweep":
        raise ConfigError(f"experiment: sweep subcommand needs experiment = sweep, got {cfg.experiment}")
    cells = sweep_cells(cfg)
    out = _out_dir(args, cfg)

    def one(cell: ExperimentConfig):
        key = cell.key()
        try:
            report, code = execute(cell, cell.experiment, out / key)
            return key, {"status": "ok", "exit_code": code, "overrides": _overrides(cell, cfg)}
        except (PreconditionError, ValueError) as e:
            return key, {"status": "error", "error": str(e), "overrides": _overrides(cell, cfg)}

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = dict(pool.map(one, cells))
    index = {k: results[k] for k in sorted(results)}
    write_json(report_envelope(cfg, {"experiment": "sweep", "cells": index}), out / "sweep.json")
    if not args.quiet:
        for k, v in index.items():
            print(f"{k} {v['status']} {json.dumps(v['overrides'], sort_keys=True)}")
    bad = any(v["status"] != "ok" for v in index.values())
    return EXIT_INVALID if bad else EXIT_OK


def _overrides(cell: ExperimentConfig, parent: ExperimentConfig) -> dict:
    return {k: cell.raw[k] for k in parent.sweep_axes}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dnls", description="Damped NLS split-step simulator and diagnostics.")
    ap.add_argument("--version", action="version", version=f"dnls {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweep")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="print the regime verdict as JSON")
    c.add_argument("--lambda", dest="lam", type=float)
    c.add_argument("--a", type=float)
    c.add_argument("--sigma1", type=float)
    c.add_argument("--sigma2", type=float)
    c.add_argument("--dim", type=int)
    c.set_defaults(func=cmd_classify)

    helps = {
        "run": "evolve and write the observable series",
        "decay": "confined mass-decay experiment",
        "torus": "torus mass-decay experiment",
        "scatter": "asymptotic-state extraction",
        "energy": "energy monotonicity / boundedness",
        "blowup": "exploratory watchdog probe",
    }
    for name, h in helps.items():
        sub.add_parser(name, parents=[common], help=h).set_defaults(func=cmd_experiment)

    k = sub.add_parser("check", parents=[common], help="run the acceptance property suite")
    k.add_argument("--only", nargs="+", metavar="NAME", help="subset of checks")
    k.set_defaults(func=cmd_check)

    sub.add_parser("sweep", parents=[common], help="run a grid of configs concurrently").set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PreconditionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
