"""Run orchestration: simulate, evaluate the requested checks, write artifacts."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .estimates import (
    BoundReport,
    calibrate_h2_constant,
    check_decay_bound,
    check_dissipation_bound,
    check_energy_identity,
    check_h2_bound,
    compute_constants,
)
from .exceptions import BlowUpError
from .fields import random_solenoidal
from .model import simulate
from .pathspace import absorbing_check
from .pressure import continuity_modulus, momentum_residual
from .snapshot import load_trajectory, store_trajectory
from .spectral import vh_norm_sq
from .trajectory import Trajectory

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3
TRAJECTORY_FILE = "trajectory.hfns"
MOMENTUM_TOL = 1e-3


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_margin: float
    detail: str = ""


def _fmt(x: float) -> str:
    return repr(float(x))


def write_summary(results: list[CheckResult], path: Path) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "passed", "worst_margin", "detail"])
        for r in results:
            w.writerow([r.name, "pass" if r.passed else "fail", _fmt(r.worst_margin), r.detail])


def _from_report(rep: BoundReport, detail: str = "") -> CheckResult:
    return CheckResult(rep.name, rep.satisfied, rep.worst_margin, detail)


def run_checks(traj: Trajectory, cfg: RunConfig, out: Path, checks=None) -> list[CheckResult]:
    """Evaluate checks on ``traj``; one CSV per report is written into ``out``."""
    checks = cfg.checks if checks is None else checks
    f = cfg.forcing_field()
    p = traj.params
    consts = compute_constants(f, p, C_h2=0.0 if cfg.C_h2 is None else cfg.C_h2)
    results: list[CheckResult] = []
    enough = len(traj) >= 2

    for name in checks:
        if name == "energy":
            rep = check_energy_identity(traj, f, tol=cfg.energy_tol)
            rep.to_csv(out / "energy.csv")
            results.append(_from_report(rep, f"max residual {_fmt(rep.worst_violation)}; sign {rep.notes['sign_supported']}"))
        elif name == "decay":
            if not enough:
                results.append(CheckResult("decay", True, math.inf, "single sample"))
                continue
            rep = check_decay_bound(traj, consts)
            rep.to_csv(out / "decay.csv")
            ok = rep.satisfied and rep.notes["envelope_below_k1"]
            results.append(CheckResult("decay", ok, rep.worst_margin, f"K1 {_fmt(consts.K1)}"))
        elif name == "dissipation":
            windows = [r for r in cfg.dissipation_windows if r <= traj.span + 1e-12]
            if not windows:
                results.append(CheckResult("dissipation", True, math.inf, "span shorter than every window"))
                continue
            ok, margin = True, math.inf
            for r in windows:
                rep = check_dissipation_bound(traj, consts, r=r)
                rep.to_csv(out / f"dissipation_r{r:g}.csv")
                ok &= rep.satisfied
                margin = min(margin, rep.worst_margin)
            results.append(CheckResult("dissipation", ok, margin, "windows " + " ".join(f"{r:g}" for r in windows)))
        elif name == "absorbing":
            res = absorbing_check(traj, consts)
            y = traj.norm_table.vh_sq
            BoundReport("absorbing", traj.local_times, y, np.full_like(y, res.threshold), np.zeros_like(y)).to_csv(
                out / "absorbing.csv"
            )
            entry = "none" if res.entry_time is None else _fmt(res.entry_time)
            results.append(
                CheckResult(
                    "absorbing",
                    res.consistent,
                    float(res.threshold - y.max()),
                    f"{res.status}; entry {entry}; gronwall t1 {_fmt(res.gronwall_time)}",
                )
            )
        elif name == "h2":
            if not enough:
                results.append(CheckResult("h2", True, math.inf, "single sample"))
                continue
            c_min = calibrate_h2_constant(traj, consts)
            c_use = replace(consts, C_h2=c_min if cfg.C_h2 is None else cfg.C_h2)
            rep = check_h2_bound(traj, c_use)
            rep.to_csv(out / "h2.csv")
            ok = rep.satisfied and math.isfinite(c_min)
            results.append(CheckResult("h2", ok, rep.worst_margin, f"C_h2 {_fmt(c_use.C_h2)}; calibrated {_fmt(c_min)}"))
        elif name == "momentum":
            if len(traj) < 3:
                results.append(CheckResult("momentum", True, math.inf, "fewer than three samples"))
                continue
            ts = traj.local_times[1:-1]
            res = np.array([momentum_residual(traj, f, p, t) for t in ts])
            BoundReport("momentum", ts, res, np.full_like(res, MOMENTUM_TOL), np.zeros_like(res)).to_csv(
                out / "momentum.csv"
            )
            results.append(CheckResult("momentum", bool(res.max() <= MOMENTUM_TOL), float(MOMENTUM_TOL - res.max()),
                                       f"max residual {_fmt(res.max())}"))
        elif name == "continuity":
            direction = random_solenoidal(p.grid, seed=12345)
            direction = direction * (1.0 / math.sqrt(vh_norm_sq(direction, p.alpha)))
            eps = (1e-2, 1e-3, 1e-4)
            rep = continuity_modulus(traj[0], direction, eps, f, p)
            with (out / "continuity.csv").open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["epsilon", "sup_vh_ratio"])
                for e, r in zip(rep.epsilons, rep.sup_vh_ratio):
                    w.writerow([_fmt(e), _fmt(r)])
            var = rep.relative_variation()
            results.append(CheckResult("continuity", rep.consistent, -var, f"{rep.label}; variation {_fmt(var)}"))
        else:
            raise ValueError(f"unknown check {name!r}")
    return results


def run(cfg: RunConfig, out=None, checks=None) -> int:
    """Simulate per ``cfg``, run checks, write trajectory/CSVs/summary; return the exit code."""
    out = Path(out if out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        traj = simulate(cfg.initial_state(), cfg.forcing_field(), cfg.params)
    except BlowUpError as exc:
        write_summary([CheckResult("simulate", False, math.nan, f"blow-up at step {exc.step} (t = {exc.time!r})")],
                      out / "summary.csv")
        log.error("%s", exc)
        return EXIT_BLOWUP
    store_trajectory(traj, out / TRAJECTORY_FILE)
    return verify(cfg, out, checks, traj=traj)


def verify(cfg: RunConfig, out, checks=None, traj: Trajectory | None = None) -> int:
    out = Path(out)
    if traj is None:
        traj = load_trajectory(out / TRAJECTORY_FILE, cfg.params)
    results = run_checks(traj, cfg, out, checks)
    write_summary(results, out / "summary.csv")
    for r in results:
        log.info("%-12s %s  worst margin %s  %s", r.name, "pass" if r.passed else "FAIL", _fmt(r.worst_margin), r.detail)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL
