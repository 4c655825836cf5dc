"""
Constants of the a priori estimates and checks of the energy identity and
the Gronwall-type bounds along sampled trajectories.

Every time integral is a trapezoidal sum on the trajectory sample lattice.
Inequality checks allow a slack of ``1e-8 * scale`` plus, for integrated
quantities, the leading Euler-Maclaurin estimate of the trapezoid error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Forcing, SimParams
from .spectral import _symbol_sum, apply_horizontal_filter, inner, lambda_h_power
from .trajectory import Trajectory

REL_SLACK = 1e-8


@dataclass(frozen=True)
class Constants:
    """Forcing-dependent constants.

    ``K1`` is the value the energy argument actually needs,
    ``min(||L^-2 f||^2 / (nu alpha^2), ||L^-1 f||^2 / nu)`` with ``L = Lambda_h``;
    ``K1_literal`` is ``min(||L^-1 f||^2, ||L^-1/2 f||^2)`` without the
    viscosity and filter factors.  Bound checks consume ``K1``.
    """

    lambda1: float
    K1: float
    K1_literal: float
    K2: float
    C_h2: float = 1.0


@dataclass
class BoundReport:
    """Row-wise comparison ``lhs <= rhs`` (or ``lhs == rhs`` for identities).

    ``slack`` is the per-row allowance; ``worst_violation`` is the largest
    amount by which ``lhs`` exceeds ``rhs + slack`` (0 when satisfied).
    """

    name: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray
    tolerance: float = 0.0
    residual: np.ndarray | None = None
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    notes: dict[str, object] = field(default_factory=dict)

    @property
    def margin(self) -> np.ndarray:
        return self.rhs - self.lhs

    @property
    def worst_violation(self) -> float:
        if self.residual is not None:
            return float(self.residual.max(initial=0.0))
        excess = -(self.margin + self.slack)
        return float(max(excess.max(initial=0.0), 0.0))

    @property
    def worst_margin(self) -> float:
        if self.residual is not None:
            return -float(self.residual.max(initial=0.0))
        return float(self.margin.min(initial=math.inf))

    @property
    def satisfied(self) -> bool:
        return self.worst_violation <= self.tolerance

    def to_csv(self, path) -> None:
        header = ["t", "lhs", "rhs", "margin"]
        cols = [self.times, self.lhs, self.rhs, self.margin]
        if self.residual is not None:
            header.append("residual")
            cols.append(self.residual)
        for key, val in self.columns.items():
            header.append(key)
            cols.append(val)
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in zip(*cols):
                writer.writerow([repr(float(x)) for x in row])


def _sq_norm(f, s: float) -> float:
    return _symbol_sum(lambda_h_power(f, s), None)


def compute_constants(f: Forcing, p: SimParams, C_h2: float = 1.0) -> Constants:
    """Evaluate ``lambda1 = 1/L^2``, both ``K1`` variants and ``K2``."""
    field_ = f.field if isinstance(f, Forcing) else f
    if C_h2 < 0:
        raise ValueError("C_h2 must be >= 0")
    nu, a2 = p.nu, p.alpha**2
    m1 = _sq_norm(field_, -1.0)
    m_half = _sq_norm(field_, -0.5)
    m2 = _sq_norm(field_, -2.0)
    m0 = _symbol_sum(field_, None)
    branch_alpha = m2 / (nu * a2) if a2 > 0 else math.inf
    K1 = min(branch_alpha, m1 / nu)
    K2 = 3.0 / nu * min(m1 / a2 if a2 > 0 else math.inf, m0)
    return Constants(lambda1=p.grid.lambda1, K1=K1, K1_literal=min(m1, m_half), K2=K2, C_h2=C_h2)


def _params(traj: Trajectory, p: SimParams | None) -> SimParams:
    return traj.params if p is None else p


def k0(traj: Trajectory, t: float, p: SimParams | None = None) -> float:
    """``||w(t)||^2 + alpha^2 ||grad_h w(t)||^2``."""
    return float(traj.norm_table.vh_sq[traj.index(t)])


def k1(traj: Trajectory, t: float, p: SimParams | None, c: Constants) -> float:
    p = _params(traj, p)
    return k0(traj, t, p) + c.K1 / (p.nu * c.lambda1)


def k2(traj: Trajectory, t: float, p: SimParams | None = None) -> float:
    """``||grad w(t)||^2 + alpha^2 ||grad grad_h w(t)||^2``."""
    return float(traj.norm_table.h2h_sq[traj.index(t)])


def h2_growth_factor(k1_value: float, p: SimParams, lambda1: float) -> float:
    """Coefficient multiplying ``C`` in ``k3``: ``k1^3/(a^8 nu^3) (1/(a^4 l1^3) + k1^2/nu^4)``."""
    if k1_value == 0:
        return 0.0
    a, nu = p.alpha, p.nu
    if a == 0:
        return math.inf
    return k1_value**3 / (a**8 * nu**3) * (1.0 / (a**4 * lambda1**3) + k1_value**2 / nu**4)


def _k3_from_k1(k1_value: float, p: SimParams, c: Constants) -> float:
    if c.C_h2 == 0:
        return c.K2
    return c.K2 + c.C_h2 * h2_growth_factor(k1_value, p, c.lambda1)


def k3(t: float, p: SimParams, c: Constants, traj: Trajectory | None = None) -> float:
    """``K2 + C k1(t)^3 / (alpha^8 nu^3) (1/(alpha^4 lambda1^3) + k1(t)^2/nu^4)``.

    ``k1`` depends on the state at ``t``, so a trajectory is required unless
    ``C_h2 = 0``.
    """
    if traj is None:
        if c.C_h2 != 0:
            raise ValueError("k3 needs the trajectory when C_h2 > 0")
        return c.K2
    return _k3_from_k1(k1(traj, t, p, c), p, c)


def k4(traj: Trajectory, t: float, p: SimParams | None, c: Constants) -> float:
    p = _params(traj, p)
    return k2(traj, t, p) + k3(t, p, c, traj) / (p.nu * c.lambda1)


def gronwall_envelope(y0: float, source: float, rate: float, s) -> np.ndarray:
    """``y0 e^{-rate s} + source/rate (1 - e^{-rate s})``."""
    s = np.asarray(s, dtype=float)
    decay = np.exp(-rate * s)
    return y0 * decay + source / rate * (1.0 - decay)


def cumulative_trapezoid(y: np.ndarray, h: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]))
    return out


def _endpoint_slopes(y: np.ndarray, h: float) -> np.ndarray:
    """Second-order one-sided/centered derivative estimates at every sample."""
    if len(y) < 3:
        return np.zeros_like(y) if len(y) < 2 else np.full_like(y, (y[1] - y[0]) / h)
    return np.gradient(y, h, edge_order=2)


def trapezoid_error(y: np.ndarray, h: float, i: int, j: int, slopes: np.ndarray | None = None) -> float:
    """Leading trapezoid error ``h^2/12 |y'(b) - y'(a)|`` over samples ``i..j``."""
    if slopes is None:
        slopes = _endpoint_slopes(y, h)
    return h * h / 12.0 * abs(slopes[j] - slopes[i])


def _forcing_work(traj: Trajectory, f: Forcing, filtered: bool = False) -> np.ndarray:
    """``<f, w(s)>`` (or ``<f, A_h w(s)>``) per sample."""
    if f.field.is_zero():
        return np.zeros(len(traj))
    fc = f.field
    if filtered:
        fc = apply_horizontal_filter(fc, traj.params.alpha)
    return np.array([inner(fc, w) for w in traj])


def check_energy_identity(traj: Trajectory, f: Forcing, p: SimParams | None = None, tol: float = 1e-5) -> BoundReport:
    """Energy balance ``1/2 y(t) + nu int D = 1/2 y(0) + int <f, w>``.

    ``y`` is the squared V_h norm and ``D = ||grad w||^2 + alpha^2 ||grad_h grad w||^2``.
    The report's residual column is ``|lhs - rhs| / max(|lhs|, |rhs|)``.  The
    alternative right-hand side ``1/2 y(0) - int <f, A_h w>`` is evaluated
    too; ``notes['sign_supported']`` names the variant with smaller residual.
    """
    p = _params(traj, p)
    h = traj.sample_dt
    nt = traj.norm_table
    y = nt.vh_sq
    dissipation = p.nu * nt.h2h_sq
    lhs = 0.5 * y + cumulative_trapezoid(dissipation, h)
    work = _forcing_work(traj, f)
    rhs = 0.5 * y[0] + cumulative_trapezoid(work, h)

    def rel(a, b):
        scale = np.maximum(np.abs(a), np.abs(b))
        return np.divide(np.abs(a - b), scale, out=np.zeros_like(a), where=scale > 0)

    residual = rel(lhs, rhs)
    rep = BoundReport(
        name="energy",
        times=traj.local_times,
        lhs=lhs,
        rhs=rhs,
        slack=np.zeros_like(lhs),
        tolerance=tol,
        residual=residual,
    )
    if not f.field.is_zero():
        rhs_alt = 0.5 * y[0] - cumulative_trapezoid(_forcing_work(traj, f, filtered=True), h)
        alt = rel(lhs, rhs_alt)
        rep.notes["residual_alternative_sign"] = float(alt.max())
        rep.notes["sign_supported"] = "+<f,w>" if residual.max() <= alt.max() else "-<f,A_h w>"
    else:
        rep.notes["sign_supported"] = "indistinguishable (f = 0)"
    return rep


def _r_values(traj: Trajectory, t: float, r) -> np.ndarray:
    h = traj.sample_dt
    i = traj.index(t)
    if r is None:
        return np.arange(1, len(traj) - i) * h
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    for ri in r:
        traj.index(t + ri)
    return r


def check_decay_bound(
    traj: Trajectory,
    c: Constants,
    p: SimParams | None = None,
    t: float = 0.0,
    r=None,
    *,
    from_origin: bool = True,
) -> BoundReport:
    """``y(t+r) <= k0(t) e^{-nu l1 s} + K1/(nu l1) (1 - e^{-nu l1 s}) <= k1(t)``.

    ``s = t + r`` when ``from_origin`` (the envelope decays from time 0);
    otherwise ``s = r``, the form Gronwall's lemma on ``[t, t+r]`` gives.
    All ``r`` on the lattice are used when ``r`` is None.
    """
    p = _params(traj, p)
    rate = p.nu * c.lambda1
    rs = _r_values(traj, t, r)
    idx = np.array([traj.index(t + ri) for ri in rs], dtype=int)
    y = traj.norm_table.vh_sq
    s = t + rs if from_origin else rs
    env = gronwall_envelope(k0(traj, t), c.K1, rate, s)
    lhs = y[idx]
    k1_t = k1(traj, t, p, c)
    slack = REL_SLACK * np.maximum(np.abs(lhs), np.abs(env))
    rep = BoundReport("decay", t + rs, lhs, env, slack, columns={"k1": np.full_like(env, k1_t)})
    rep.notes["envelope_below_k1"] = bool(np.all(env <= k1_t * (1 + REL_SLACK)))
    return rep


def check_dissipation_bound(
    traj: Trajectory,
    c: Constants,
    p: SimParams | None = None,
    t: float | None = None,
    r: float = 1.0,
) -> BoundReport:
    """``int_t^{t+r} nu D ds <= r K1 + k1(t)`` for one ``t`` or, if None, every lattice ``t``."""
    p = _params(traj, p)
    h = traj.sample_dt
    if r <= 0:
        raise ValueError("r must be positive")
    nr = traj.index(r)
    D = p.nu * traj.norm_table.h2h_sq
    cum = cumulative_trapezoid(D, h)
    slopes = _endpoint_slopes(D, h)
    starts = np.arange(len(traj) - nr) if t is None else np.array([traj.index(t)])
    if t is not None:
        traj.index(t + r)
    ends = starts + nr
    lhs = cum[ends] - cum[starts]
    offset = c.K1 / (p.nu * c.lambda1)
    rhs = r * c.K1 + traj.norm_table.vh_sq[starts] + offset
    quad = np.array([trapezoid_error(D, h, i, j, slopes) for i, j in zip(starts, ends)])
    slack = REL_SLACK * np.maximum(np.abs(lhs), np.abs(rhs)) + quad
    return BoundReport("dissipation", starts * h, lhs, rhs, slack, columns={"r": np.full(len(starts), float(r))})


def calibrate_h2_constant(
    traj: Trajectory,
    c: Constants,
    p: SimParams | None = None,
    t: float = 0.0,
    r=None,
    *,
    from_origin: bool = True,
) -> float:
    """Smallest ``C >= 0`` for which the H^2_h bound holds on the sampled window."""
    p = _params(traj, p)
    rate = p.nu * c.lambda1
    rs = _r_values(traj, t, r)
    idx = np.array([traj.index(t + ri) for ri in rs], dtype=int)
    s = t + rs if from_origin else rs
    decay = np.exp(-rate * s)
    lhs = traj.norm_table.h2h_sq[idx]
    base = k2(traj, t) * decay + c.K2 / rate * (1.0 - decay)
    excess = lhs - base - REL_SLACK * np.maximum(np.abs(lhs), np.abs(base))
    if np.all(excess <= 0):
        return 0.0
    G = h2_growth_factor(k1(traj, t, p, c), p, c.lambda1)
    if G == 0:
        return math.inf
    if math.isinf(G):
        # alpha = 0: any positive constant makes k3 infinite
        return math.ulp(0.0)
    # solve the strict inequality so the returned constant clears the slack
    with np.errstate(divide="ignore"):
        needed = np.where(excess > 0, (lhs - base) * rate / ((1.0 - decay) * G), 0.0)
    return float(needed.max())


def check_h2_bound(
    traj: Trajectory,
    c: Constants,
    p: SimParams | None = None,
    t: float = 0.0,
    r=None,
    *,
    from_origin: bool = True,
) -> BoundReport:
    """``k2(t+r) <= k2(t) e^{-nu l1 s} + k3(t)/(nu l1) (1 - e^{-nu l1 s}) <= k4(t)``.

    ``notes['calibrated_C_h2']`` is the smallest constant that makes the first
    inequality hold on the sampled window.
    """
    p = _params(traj, p)
    rate = p.nu * c.lambda1
    rs = _r_values(traj, t, r)
    idx = np.array([traj.index(t + ri) for ri in rs], dtype=int)
    s = t + rs if from_origin else rs
    k3_t = k3(t, p, c, traj)
    env = gronwall_envelope(k2(traj, t), k3_t, rate, s)
    lhs = traj.norm_table.h2h_sq[idx]
    slack = REL_SLACK * np.maximum(np.abs(lhs), np.abs(env))
    k4_t = k4(traj, t, p, c)
    rep = BoundReport("h2", t + rs, lhs, env, slack, columns={"k4": np.full_like(env, k4_t)})
    rep.notes["calibrated_C_h2"] = calibrate_h2_constant(traj, c, p, t, r, from_origin=from_origin)
    rep.notes["C_h2"] = c.C_h2
    return rep


def gronwall_entry_time(k0_value: float, c: Constants, p: SimParams) -> float:
    """Earliest ``t1`` with ``k0 e^{-nu l1 t1} <= K1/(nu l1)`` (inf when ``K1 = 0 < k0``)."""
    rate = p.nu * c.lambda1
    level = c.K1 / rate
    if k0_value <= level:
        return 0.0
    if level == 0:
        return math.inf
    return math.log(k0_value / level) / rate
