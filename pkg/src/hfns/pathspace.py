"""
Trajectories as points of a path space.

The metric is the truncated series

    d_N(a, b) = sum_{n=1}^N 2^-n min(1, ||a - b||_{L^2(0, n; V_h)}),

whose tail beyond ``N`` is at most ``2^-N``.  Shifts act on the sample
lattice only, so the semigroup law holds sample for sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimates import Constants, cumulative_trapezoid, gronwall_entry_time
from .exceptions import OffLatticeError
from .spectral import _symbol_sum, SpectralVectorField
from .trajectory import Trajectory

__all__ = [
    "Trajectory",
    "PathMetricConfig",
    "AbsorbingResult",
    "time_shift",
    "window_distance",
    "path_metric",
    "hausdorff_semidistance",
    "absorbing_check",
]


@dataclass(frozen=True)
class PathMetricConfig:
    n_terms: int = 20

    def __post_init__(self):
        if int(self.n_terms) != self.n_terms or self.n_terms < 1:
            raise ValueError("n_terms must be a positive integer")

    @property
    def truncation_bound(self) -> float:
        return 2.0 ** -self.n_terms


def time_shift(traj: Trajectory, t: float) -> Trajectory:
    """``S(t) w = w(. + t)``; ``t`` must be a lattice point within the span."""
    if t < 0:
        raise OffLatticeError("shift must be nonnegative")
    return traj.sliced(traj.index(t))


def _check_compatible(a: Trajectory, b: Trajectory):
    if a.params.grid != b.params.grid:
        raise ValueError("trajectories live on different grids")
    if a.sample_dt != b.sample_dt:
        raise ValueError("trajectories use different sample lattices")
    if a.params.alpha != b.params.alpha:
        raise ValueError("trajectories use different filter widths")


def _difference_vh_sq(a: Trajectory, b: Trajectory, stop: int) -> np.ndarray:
    """Squared V_h norm of ``a - b`` at samples ``0 .. stop - 1``."""
    g = a.params.grid
    symbol = 1.0 + a.params.alpha**2 * g.kh_sq
    out = np.empty(stop)
    for j in range(stop):
        d = SpectralVectorField(g, a.states[j] - b.states[j])
        out[j] = _symbol_sum(d, symbol)
    return out


def window_distance(a: Trajectory, b: Trajectory, t_lo: float, t_hi: float) -> float:
    """``(int_{t_lo}^{t_hi} ||a - b||_{V_h}^2 ds)^{1/2}`` in local time, trapezoidal."""
    _check_compatible(a, b)
    if t_hi < t_lo:
        raise ValueError("t_hi must be >= t_lo")
    i, j = a.index(t_lo), a.index(t_hi)
    b.index(t_hi)
    sq = _difference_vh_sq(a, b, j + 1)[i:]
    return math.sqrt(max(float(cumulative_trapezoid(sq, a.sample_dt)[-1]), 0.0))


def path_metric(a: Trajectory, b: Trajectory, cfg: PathMetricConfig | None = None) -> float:
    """Truncated series distance; both paths must span ``[0, cfg.n_terms]``.

    The neglected tail is at most ``cfg.truncation_bound``.
    """
    cfg = cfg or PathMetricConfig()
    _check_compatible(a, b)
    N = cfg.n_terms
    try:
        last = a.index(float(N))
        b.index(float(N))
    except OffLatticeError as exc:
        raise ValueError(f"paths must span [0, {N}] on their sample lattice: {exc}") from None
    sq = _difference_vh_sq(a, b, last + 1)
    cum = cumulative_trapezoid(sq, a.sample_dt)
    total = 0.0
    for n in range(1, N + 1):
        dist = math.sqrt(max(float(cum[a.index(float(n))]), 0.0))
        total += 2.0**-n * min(1.0, dist)
    return total


def hausdorff_semidistance(X, Y, cfg: PathMetricConfig | None = None) -> float:
    """``sup_{x in X} inf_{y in Y} d(x, y)`` over finite trajectory sets."""
    X, Y = list(X), list(Y)
    if not X or not Y:
        raise ValueError("Hausdorff semidistance needs nonempty sets")
    cfg = cfg or PathMetricConfig()
    return max(min(path_metric(x, y, cfg) for y in Y) for x in X)


@dataclass(frozen=True)
class AbsorbingResult:
    """Outcome of the absorbing-ball test.

    ``status`` is ``"entered"``, ``"never within span"`` or
    ``"degenerate threshold"`` (``K1 = 0``: only the zero path qualifies).
    """

    status: str
    entry_time: float | None
    threshold: float
    gronwall_time: float
    span: float

    @property
    def consistent(self) -> bool:
        """Entry no later than the Gronwall prediction whenever the span reaches it."""
        if self.status == "degenerate threshold":
            return True
        if self.gronwall_time > self.span:
            return True
        return self.entry_time is not None and self.entry_time <= self.gronwall_time + 1e-12


def absorbing_check(traj: Trajectory, c: Constants) -> AbsorbingResult:
    """Earliest local time after which ``y(t) <= 2 K1/(nu lambda1)`` holds to the end of the span."""
    p = traj.params
    threshold = 2.0 * c.K1 / (p.nu * c.lambda1)
    y = traj.norm_table.vh_sq
    t1 = gronwall_entry_time(float(y[0]), c, p)
    inside = y <= threshold
    if c.K1 == 0 and np.any(y > 0):
        return AbsorbingResult("degenerate threshold", None, threshold, t1, traj.span)
    if not inside[-1]:
        return AbsorbingResult("never within span", None, threshold, t1, traj.span)
    outside = np.flatnonzero(~inside)
    j = 0 if outside.size == 0 else int(outside[-1]) + 1
    return AbsorbingResult("entered", j * traj.sample_dt, threshold, t1, traj.span)
