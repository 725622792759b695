"""Command-line front end.

Commands
    validate    structural assumption checks, report printed as JSON
    simulate    one trajectory to CSV plus run metadata
    classify    invasion thresholds and the regime call
    regime-map  threshold sweep over two parameter axes
    diagnose    asymptotic-claim checks on simulated ensembles

Every command reads one JSON configuration (see `config`); a handful of
flags override single values from it. Exit codes: 0 success, 1 a checked
claim failed (assumption violation, failed diagnostic, numerical blow-up),
2 usage or configuration error. All randomness flows from the configured
seed, so rerunning a command with the same configuration reproduces its
CSV/JSON/SVG outputs byte for byte. Files are written atomically (temp
file, then rename) so a crash never leaves a half-written artifact.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import tempfile
from dataclasses import replace

import numpy as np
import scipy

from . import __version__
from .config import FORMATS, RunConfig, load_config, parse_axis
from .diagnostics import (
    convergence_check,
    extinction_rate_check,
    moment_bound_check,
    negative_moment_check,
)
from .engine import run_paths, simulate_full3d
from .errors import (
    AssumptionViolated,
    ConfigError,
    NotApplicable,
    StepOverflow,
    ToleranceNotMet,
)
from .model import validate_params
from .svgplot import regime_map_svg, trajectory_svg
from .thresholds import (
    DEFAULT_TOL,
    build_threshold_report,
    lambda2_estimate,
    regime_map,
)

__all__ = ["main"]

_CHECKS = ("extinction", "moments", "negmoment", "convergence")

EXIT_PASS = 0
EXIT_CLAIM_FAILED = 1
EXIT_USAGE = 2


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_text_atomic(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _trajectory_csv(traj) -> str:
    # repr of a Python float is the shortest round-trip decimal form, so
    # reading the file back reproduces every bit.
    lines = ["t,x,y,z"]
    for t, (x, y, z) in zip(traj.times, traj.states):
        lines.append(f"{float(t)!r},{float(x)!r},{float(y)!r},{float(z)!r}")
    return "\n".join(lines) + "\n"


def _versions() -> dict:
    import numba

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "npzsde": __version__,
    }


def _initial(experiment: dict, key: str, default) -> tuple[float, float, float]:
    raw = experiment.get(key, default)
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 3
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw)
    ):
        raise ConfigError(f"experiment.{key} must be a list of three numbers")
    return (float(raw[0]), float(raw[1]), float(raw[2]))


def _number(experiment: dict, key: str, default):
    v = experiment.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"experiment.{key} must be a number")
    return v


def _apply_overrides(rc: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Fold the override flags into the loaded configuration."""
    sim_updates = {}
    if args.seed is not None:
        sim_updates["seed"] = args.seed
    if args.paths is not None:
        sim_updates["n_paths"] = args.paths
    if args.t_end is not None:
        sim_updates["t_end"] = args.t_end
        # A burn-in tied to the old horizon would be invalid or misleading.
        sim_updates["burn_in"] = None
    if args.dt is not None:
        sim_updates["dt"] = args.dt
    sim = rc.sim
    if sim_updates:
        try:
            sim = replace(sim, **sim_updates)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    output = rc.output
    if args.out_dir is not None:
        output = replace(output, out_dir=args.out_dir)
    if args.format is not None:
        formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
        bad = [f for f in formats if f not in FORMATS]
        if bad or not formats:
            raise ConfigError(f"--format must list entries from {FORMATS}")
        output = replace(output, formats=formats)
    experiment = dict(rc.experiment)
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol must be > 0")
        experiment["tol"] = args.tol
    return replace(rc, sim=sim, output=output, experiment=experiment)


def _validation_gate(rc: RunConfig) -> None:
    """Raise AssumptionViolated unless every structural check passes."""
    report = validate_params(rc.params, rc.f1, rc.f2)
    if not report.all_passed:
        failed = "; ".join(c.name for c in report.checks if not c.passed)
        raise AssumptionViolated(failed)


def cmd_validate(rc: RunConfig, args: argparse.Namespace) -> int:
    report = validate_params(rc.params, rc.f1, rc.f2)
    _print_json(report.to_dict())
    return EXIT_PASS if report.all_passed else EXIT_CLAIM_FAILED


def cmd_simulate(rc: RunConfig, args: argparse.Namespace) -> int:
    _validation_gate(rc)
    init = _initial(rc.experiment, "initial", [1.0, 1.0, 1.0])
    traj = simulate_full3d(rc.params, (rc.f1, rc.f2), init, rc.sim, path_id=0)
    out_dir = rc.output.out_dir
    os.makedirs(out_dir, exist_ok=True)
    files = []
    if "csv" in rc.output.formats:
        path = os.path.join(out_dir, "trajectory.csv")
        _write_text_atomic(path, _trajectory_csv(traj))
        files.append(path)
    meta = {
        "seed": rc.sim.seed,
        "dt": rc.sim.dt,
        "scheme": rc.sim.scheme,
        "clamp_events": traj.clamp_events,
        "versions": _versions(),
    }
    meta_path = os.path.join(out_dir, "run_meta.json")
    _write_text_atomic(meta_path, json.dumps(meta, indent=2, sort_keys=True) + "\n")
    files.append(meta_path)
    if "svg" in rc.output.formats:
        path = os.path.join(out_dir, "trajectory.svg")
        _write_text_atomic(path, trajectory_svg(traj.times, traj.states))
        files.append(path)
    _print_json(
        {
            "files": files,
            "clamp_events": traj.clamp_events,
            "recorded_steps": len(traj),
        }
    )
    return EXIT_PASS


def cmd_classify(rc: RunConfig, args: argparse.Namespace) -> int:
    _validation_gate(rc)
    tol = _number(rc.experiment, "tol", DEFAULT_TOL)
    report = build_threshold_report(rc.params, rc.f1, rc.f2, cfg=rc.sim, tol=tol)
    out = report.to_dict()
    # The closed form is exact for constant responses; the Monte Carlo
    # companion quantifies how far the simulated estimator lands from it.
    if rc.f1.is_constant and rc.f2.is_constant and report.lambda2 is not None:
        out["lambda2_closed_form"] = report.lambda2
        est = lambda2_estimate(rc.params, rc.f1, rc.f2, rc.sim, tol=tol)
        out["lambda2_mc"] = est.value
        out["lambda2_mc_ci"] = [est.ci_low, est.ci_high]
        out["lambda2_discrepancy"] = abs(est.value - report.lambda2)
    _print_json(out)
    return EXIT_PASS


def cmd_regime_map(rc: RunConfig, args: argparse.Namespace) -> int:
    _validation_gate(rc)
    axis1 = args.axis1 or rc.experiment.get("axis1")
    axis2 = args.axis2 or rc.experiment.get("axis2")
    if not axis1 or not axis2:
        raise ConfigError(
            "regime-map needs --axis1 and --axis2 (or experiment.axis1/axis2)"
        )
    tol = _number(rc.experiment, "tol", DEFAULT_TOL)
    try:
        result = regime_map(
            rc.params,
            rc.f1,
            rc.f2,
            parse_axis(axis1),
            parse_axis(axis2),
            cfg=rc.sim,
            tol=tol,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out_dir = rc.output.out_dir
    os.makedirs(out_dir, exist_ok=True)
    files = []
    lines = ["axis1,axis2,lambda1,lambda2,regime"]
    counts: dict[str, int] = {}
    for v1, v2, rep in result.rows():
        lam2 = "" if rep.lambda2 is None else repr(float(rep.lambda2))
        lines.append(f"{float(v1)!r},{float(v2)!r},{float(rep.lambda1)!r},{lam2},{rep.regime}")
        counts[rep.regime] = counts.get(rep.regime, 0) + 1
    if "csv" in rc.output.formats:
        path = os.path.join(out_dir, "regime_map.csv")
        _write_text_atomic(path, "\n".join(lines) + "\n")
        files.append(path)
    if "svg" in rc.output.formats:
        path = os.path.join(out_dir, "regime_map.svg")
        _write_text_atomic(path, regime_map_svg(result))
        files.append(path)
    _print_json(
        {
            "files": files,
            "cells": len(result.axis1_values) * len(result.axis2_values),
            "regimes": counts,
        }
    )
    return EXIT_PASS


def cmd_diagnose(rc: RunConfig, args: argparse.Namespace) -> int:
    _validation_gate(rc)
    check = args.check or rc.experiment.get("check")
    if check not in _CHECKS:
        raise ConfigError(f"--check must be one of {_CHECKS}, got {check!r}")
    tol = _number(rc.experiment, "tol", DEFAULT_TOL)
    init = _initial(rc.experiment, "initial", [1.0, 1.0, 1.0])
    exp = rc.experiment
    if check == "extinction":
        window = exp.get("window")
        if window is not None:
            if not (isinstance(window, (list, tuple)) and len(window) == 2):
                raise ConfigError("experiment.window must be [start, end]")
            window = (float(window[0]), float(window[1]))
        targets = exp.get("targets")
        if targets is not None:
            if not isinstance(targets, dict) or not set(targets) <= {"y", "z"}:
                raise ConfigError('experiment.targets keys must be "y" and/or "z"')
            targets = {k: float(v) for k, v in targets.items()}
        # The regime call uses the closed forms; Monte Carlo lambda2 is not
        # consulted here, so nonconstant-response setups must pass explicit
        # targets to be checkable.
        regime = build_threshold_report(rc.params, rc.f1, rc.f2, tol=tol).regime
        report = extinction_rate_check(
            rc.params, (rc.f1, rc.f2), regime, rc.sim,
            window=window, targets=targets, init=init,
        )
    elif check == "moments":
        q = float(_number(exp, "q", 1.2))
        ensemble = run_paths(
            lambda pid: simulate_full3d(rc.params, (rc.f1, rc.f2), init, rc.sim, path_id=pid),
            rc.sim.n_paths,
        )
        report = moment_bound_check(
            rc.params, ensemble, q, tail_mult=float(_number(exp, "tail_mult", 2.0))
        )
    elif check == "negmoment":
        report = negative_moment_check(
            rc.params,
            rc.f1,
            rc.sim,
            theta=float(_number(exp, "theta", 0.1)),
            init_xy=init[:2],
            tail_mult=float(_number(exp, "tail_mult", 2.0)),
        )
    else:
        report = convergence_check(
            rc.params,
            (rc.f1, rc.f2),
            init,
            _initial(exp, "initial_b", [5.0, 5.0, 5.0]),
            rc.sim,
            dims=int(_number(exp, "dims", 3)),
            n_bins=int(_number(exp, "n_bins", 8)),
            n_windows=int(_number(exp, "n_windows", 5)),
            tv_threshold=float(_number(exp, "tv_threshold", 0.1)),
        )
    _print_json(report.to_dict())
    return EXIT_PASS if report.passed else EXIT_CLAIM_FAILED


_HANDLERS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "classify": cmd_classify,
    "regime-map": cmd_regime_map,
    "diagnose": cmd_diagnose,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npzsde",
        description="Simulate and classify the stochastic nutrient-phytoplankton-"
        "zooplankton chain.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON configuration")
    common.add_argument("--seed", type=int, default=None, help="override sim.seed")
    common.add_argument("--out-dir", default=None, help="override output.out_dir")
    common.add_argument(
        "--format", default=None, help="override output.formats, e.g. csv,json,svg"
    )
    common.add_argument("--tol", type=float, default=None, help="override experiment.tol")
    common.add_argument("--paths", type=int, default=None, help="override sim.n_paths")
    common.add_argument("--t-end", type=float, default=None, help="override sim.t_end")
    common.add_argument("--dt", type=float, default=None, help="override sim.dt")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check structural assumptions")
    sub.add_parser("simulate", parents=[common], help="integrate one trajectory")
    sub.add_parser("classify", parents=[common], help="thresholds and regime")
    rm = sub.add_parser("regime-map", parents=[common], help="two-axis regime sweep")
    rm.add_argument("--axis1", default=None, help='sweep axis, "name=start:stop:count"')
    rm.add_argument("--axis2", default=None, help='sweep axis, "name=start:stop:count"')
    dg = sub.add_parser("diagnose", parents=[common], help="asymptotic-claim checks")
    dg.add_argument("--check", choices=_CHECKS, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        rc = _apply_overrides(load_config(args.config), args)
        return _HANDLERS[args.command](rc, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotApplicable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssumptionViolated as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_CLAIM_FAILED
    except (StepOverflow, ToleranceNotMet) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CLAIM_FAILED


if __name__ == "__main__":
    sys.exit(main())
