"""Command line entry point ``hfns``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
error, 3 blow-up during time stepping.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .config import ALL_CHECKS, OPTIONAL_CHECKS, load_config
from .exceptions import ConfigError, SnapshotError
from .pathspace import PathMetricConfig, hausdorff_semidistance, path_metric
from .pressure import momentum_residual, pressure_bounds, recover_pressure
from .runner import EXIT_BLOWUP, EXIT_FAIL, EXIT_OK, EXIT_USAGE, TRAJECTORY_FILE, run, verify
from .snapshot import load_trajectory
from .spectral import _symbol_sum

log = logging.getLogger("hfns")


def _checks(value: str):
    if value in ("all", ""):
        return ALL_CHECKS
    names = tuple(x.strip() for x in value.split(",") if x.strip())
    bad = [x for x in names if x not in ALL_CHECKS + OPTIONAL_CHECKS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown check(s): {', '.join(bad)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="run configuration file")
    common.add_argument("--out", type=Path, help="output directory (overrides [run] out)")
    common.add_argument("--checks", type=_checks, help="comma-separated checks, or 'all'")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    parser = argparse.ArgumentParser(prog="hfns", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate the model and run checks")
    sub.add_parser("verify", parents=[common], help="run checks on a stored trajectory")
    m = sub.add_parser("metric", parents=[common], help="path-space distances between stored trajectories")
    m.add_argument("trajectories", nargs="+", type=Path, help="trajectory files (set X)")
    m.add_argument("--against", nargs="+", type=Path, default=(), help="trajectory files (set Y)")
    sub.add_parser("pressure", parents=[common], help="pressure diagnostics along a stored trajectory")
    return parser


def _metric(cfg, out: Path, args) -> int:
    mcfg = PathMetricConfig(cfg.metric_terms)
    X = [load_trajectory(p, cfg.params) for p in args.trajectories]
    Y = [load_trajectory(p, cfg.params) for p in args.against]
    with (out / "metric.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "distance", "truncation_bound"])
        for i, a in enumerate(X):
            for j, b in enumerate(X):
                w.writerow([args.trajectories[i], args.trajectories[j], repr(path_metric(a, b, mcfg)), repr(mcfg.truncation_bound)])
        if Y:
            w.writerow(["X", "Y", repr(hausdorff_semidistance(X, Y, mcfg)), repr(mcfg.truncation_bound)])
            w.writerow(["Y", "X", repr(hausdorff_semidistance(Y, X, mcfg)), repr(mcfg.truncation_bound)])
    return EXIT_OK


def _pressure(cfg, out: Path) -> int:
    p = cfg.params
    traj = load_trajectory(out / TRAJECTORY_FILE, p)
    f = cfg.forcing_field()
    ok = True
    with (out / "pressure.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "q_l2", "grad_h_q", "elliptic_lhs", "elliptic_rhs", "momentum_residual"])
        for j, t in enumerate(traj.local_times):
            state = traj[j]
            q = recover_pressure(state, f, p)
            b = pressure_bounds(state, f, p)
            ok &= b.satisfied
            res = momentum_residual(traj, f, p, t) if 0 < j < len(traj) - 1 else float("nan")
            w.writerow([repr(float(t)), repr(_symbol_sum(q, None) ** 0.5), repr(b.grad_h_q), repr(b.lhs), repr(b.rhs), repr(res)])
    return EXIT_OK if ok else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"hfns: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out if args.out is not None else cfg.out
    if out is None:
        print("hfns: no output directory (use --out or [run] out)", file=sys.stderr)
        return EXIT_USAGE
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "simulate":
            return run(cfg, out, args.checks)
        if args.command == "verify":
            return verify(cfg, out, args.checks)
        if args.command == "metric":
            return _metric(cfg, out, args)
        if args.command == "pressure":
            return _pressure(cfg, out)
    except (SnapshotError, FileNotFoundError, ValueError) as exc:
        print(f"hfns: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_FAIL", "EXIT_USAGE", "EXIT_BLOWUP"]
