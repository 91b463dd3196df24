"""Command-line front end.

Exit codes: 0 success, 1 runtime or check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from nhpp_decay import __version__
from nhpp_decay.analytic import QuadratureConfig, QuadratureError, density_Tn, survival_Tn, tail_exponent
from nhpp_decay.inference import (
    DEFAULT_MASS_RANGE,
    EmptySampleError,
    InsufficientDataError,
    fit_hill_mle,
    fit_loglog_regression,
    fit_nhpp_mle,
    intervals_from_events,
    log_binned_ccdf,
    log_binned_pdf,
)
from nhpp_decay.intensity import IntensityParams
from nhpp_decay.io import atomic_write_text, columns_csv, ensemble_csv, json_text, read_timestamps, series_csv, write_json
from nhpp_decay.simulate import SimulationConfig, simulate_ensemble
from nhpp_decay.validate import run_validation


class UsageError(Exception):
    """Invalid arguments or input; maps to exit code 2."""


def _params(args):
    if not args.b > 0:
        raise UsageError(f"--b must satisfy b > 0 (got {args.b})")
    if not args.a >= 0:
        raise UsageError(f"--a must satisfy a >= 0 (got {args.a})")
    return IntensityParams(args.a, args.b)


def _table(path_stem: Path, fmt: str, header, columns):
    if fmt == "json":
        obj = {h: np.asarray(c).tolist() for h, c in zip(header, columns)}
        return atomic_write_text(path_stem.with_suffix(".json"), json_text(obj))
    return atomic_write_text(path_stem.with_suffix(".csv"), columns_csv(header, columns))


def _manifest(args, command, files):
    # the output location and worker count do not affect results
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "workers")}
    for k, v in config.items():
        if isinstance(v, Path):
            config[k] = str(v)
    return {"command": command, "version": __version__, "config": config, "files": sorted(files)}


def cmd_simulate(args):
    params = _params(args)
    if (args.horizon is None) == (args.count is None):
        raise UsageError("give exactly one of --horizon and --count")
    if args.horizon is not None and not args.horizon > 0:
        raise UsageError("--horizon must be > 0")
    if args.count is not None and args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.replicas < 1:
        raise UsageError("--replicas must be >= 1")
    if not 0 <= args.seed < 2**64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    cfg = SimulationConfig(
        params,
        horizon=args.horizon,
        count=args.count,
        replicas=args.replicas,
        master_seed=args.seed,
        method=args.method,
    )
    ens = simulate_ensemble(cfg, workers=args.workers)
    out = Path(args.out)
    files = []
    if args.layout == "combined":
        files.append(atomic_write_text(out / "events.csv", ensemble_csv(ens.series)).name)
    else:
        width = max(5, len(str(cfg.replicas - 1)))
        for i, s in enumerate(ens.series):
            files.append(atomic_write_text(out / f"series_{i:0{width}d}.csv", series_csv(s)).name)
    manifest = _manifest(args, "simulate", files)
    manifest["window_ends"] = [s.window_end for s in ens.series] if cfg.count is not None else cfg.horizon
    write_json(out / "manifest.json", manifest)
    return 0


def _theory_grid(args):
    if args.t:
        t = np.asarray(args.t, dtype=float)
    else:
        if args.points < 1:
            raise UsageError("--points must be >= 1")
        if args.points == 1:
            t = np.array([args.t_min])
        else:
            if not args.t_min > 0 or not args.t_max > args.t_min:
                raise UsageError("log grid needs 0 < --t-min < --t-max")
            t = np.logspace(math.log10(args.t_min), math.log10(args.t_max), args.points)
    if np.any(t < 0):
        raise UsageError("t values must be >= 0")
    return t


def cmd_theory(args):
    params = _params(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    t = _theory_grid(args)
    try:
        quad = QuadratureConfig(relative_tolerance=args.tolerance)
    except ValueError as exc:
        raise UsageError(f"--tolerance: {exc}") from exc
    surv = survival_Tn(params, args.n, t, quad)
    dens = density_Tn(params, args.n, t, quad)
    out = Path(args.out)
    path = _table(out / "theory", args.format, ["t", "survival", "density"], [t, surv, dens])
    tail = tail_exponent(params)
    write_json(
        out / "manifest.json",
        {**_manifest(args, "theory", [path.name]), "tail_exponent": tail.exponent},
    )
    return 0


def _load(args):
    try:
        series = read_timestamps(args.input, window_end=getattr(args, "window_end", None))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from exc
    if sum(len(s) for s in series) < 2:
        raise UsageError(f"{args.input}: need at least 2 events")
    return series


def cmd_analyze(args):
    if args.mode == "fixed" and (args.n is None or args.n < 1):
        raise UsageError("--mode fixed needs --n >= 1")
    series = _load(args)
    try:
        sample = intervals_from_events(
            series, args.mode, n=args.n, ties=args.ties, resolution=args.resolution
        )
    except EmptySampleError as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out)
    files = [
        _table(out / "intervals", args.format, ["interval"], [sample.intervals]).name,
    ]
    pdf = log_binned_pdf(sample, args.bins_per_decade)
    ccdf = log_binned_ccdf(sample, args.bins_per_decade)
    files.append(_table(out / "pdf", args.format, ["t", "value"], [pdf.t, pdf.value]).name)
    files.append(_table(out / "ccdf", args.format, ["t", "value"], [ccdf.t, ccdf.value]).name)
    mass = tuple(args.mass_range)
    reg = fit_loglog_regression(pdf, fit_range=args.fit_range, mass_range=mass)
    hill = fit_hill_mle(sample, args.tmin)
    write_json(out / "fit_regression.json", reg.to_dict())
    write_json(out / "fit_hill.json", hill.to_dict())
    files += ["fit_regression.json", "fit_hill.json"]
    write_json(out / "manifest.json", _manifest(args, "analyze", files))
    return 0


def cmd_fit(args):
    series = _load(args)
    fit = fit_nhpp_mle(series if len(series) > 1 else series[0])
    out = Path(args.out)
    write_json(out / "nhpp_fit.json", fit.to_dict())
    write_json(out / "manifest.json", _manifest(args, "fit", ["nhpp_fit.json"]))
    return 0


def cmd_validate(args):
    if not args.scale > 0:
        raise UsageError("--scale must be > 0")
    report = run_validation(args.seed, scale=args.scale, n_offset=args.n_offset)
    out = Path(args.out)
    write_json(out / "report.json", report)
    write_json(out / "manifest.json", _manifest(args, "validate", ["report.json"]))
    for check in report["checks"]:
        print(f"{'PASS' if check['passed'] else 'FAIL'}  {check['name']}")
    return 0 if report["all_passed"] else 1


def _add_params(p, need_a=True):
    p.add_argument("--a", type=float, required=need_a, help="decay rate a >= 0")
    p.add_argument("--b", type=float, required=True, help="initial rate b > 0")


def build_parser():
    parser = argparse.ArgumentParser(prog="nhpp-decay", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate event series")
    _add_params(p)
    p.add_argument("--horizon", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--method", choices=["inversion", "thinning"], default="inversion")
    p.add_argument("--layout", choices=["files", "combined"], default="files",
                   help="one CSV per replica, or a single replica,t CSV")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("theory", help="exact survival and density of T_{n+1}")
    _add_params(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--t", type=float, nargs="+", help="explicit t values")
    p.add_argument("--t-min", type=float, default=1e-3)
    p.add_argument("--t-max", type=float, default=1e6)
    p.add_argument("--points", type=int, default=91)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("analyze", help="interval distribution and power-law fits")
    p.add_argument("input", type=Path)
    p.add_argument("--bins-per-decade", type=int, default=10)
    p.add_argument("--fit-range", type=float, nargs=2, metavar=("T_LO", "T_HI"))
    p.add_argument("--mass-range", type=float, nargs=2, default=list(DEFAULT_MASS_RANGE), metavar=("Q_LO", "Q_HI"),
                   help="sample-mass quantiles bounding the default regression range")
    p.add_argument("--tmin", type=float, default=None, help="Hill threshold (default: median)")
    p.add_argument("--mode", choices=["pooled", "fixed"], default="pooled")
    p.add_argument("--n", type=int, default=None, help="event index for --mode fixed")
    p.add_argument("--ties", choices=["replace", "drop"], default="replace")
    p.add_argument("--resolution", type=float, default=None)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="maximum-likelihood (a, b)")
    p.add_argument("input", type=Path)
    p.add_argument("--window-end", type=float, default=None,
                   help="observation end (default: last event)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="run the simulation/theory cross-checks")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--scale", type=float, default=1.0, help="sample-size multiplier")
    p.add_argument("--n-offset", type=int, default=0,
                   help="compare T_{n+1} samples against the law of T_{n+1+offset} (negative control)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (QuadratureError, InsufficientDataError) as exc:
        print(f"{parser.prog} {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"{parser.prog} {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
