"""
Filtered pressure reconstruction and regularity diagnostics.

The pressure solves ``-Lap A_h q = div div(w (x) w) - div f``, i.e. in
Fourier space

    q_k = (-k_i k_j T_ij(k) - i k . f_k) / (|k|^2 (1 + alpha^2 |k_h|^2)),

with ``T`` the (dealiased) product ``w_i w_j`` and ``q_0 = 0``.  Negative
Sobolev norms use the weights ``(1 + |k|^2)^-s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SimParams, _as_forcing, product_divergence, product_tensor, simulate
from .spectral import (
    SpectralScalarField,
    SpectralVectorField,
    _symbol_sum,
    filter_symbol,
    laplacian,
    norms,
)
from .trajectory import Trajectory

PressureField = SpectralScalarField


def double_divergence(w: SpectralVectorField, dealias: str = "two-thirds") -> np.ndarray:
    """Coefficients of ``div div(w (x) w) = -k_i k_j T_ij``."""
    g = w.grid
    K = g.K
    T = product_tensor(w, dealias)
    out = np.zeros(g.shape, dtype=np.complex128)
    for (i, j), t in T.items():
        factor = 1.0 if i == j else 2.0
        out -= factor * K[i] * K[j] * t
    return out


def recover_pressure(w: SpectralVectorField, f, p: SimParams) -> PressureField:
    g = w.grid
    f = _as_forcing(f, g)
    source = double_divergence(w, p.dealias) - (1j * g.K * f.field.coeffs).sum(axis=0)
    q = source / (g.k_sq_safe * filter_symbol(g, p.alpha))
    q[0, 0, 0] = 0.0
    return PressureField(g, q)


def pressure_residual(q: PressureField, w: SpectralVectorField, f, p: SimParams) -> float:
    """Mode-wise relative residual of ``-Lap A_h q = div div(w w) - div f``."""
    g = w.grid
    f = _as_forcing(f, g)
    source = double_divergence(w, p.dealias) - (1j * g.K * f.field.coeffs).sum(axis=0)
    lhs = g.k_sq * filter_symbol(g, p.alpha) * q.coeffs
    scale = max(np.abs(source).max(), np.abs(lhs).max())
    if scale == 0:
        return 0.0
    return float(np.abs((lhs - source) * g.retained).max() / scale)


def _sobolev_sq(c: np.ndarray, grid, s: float, rank: int) -> float:
    power = np.abs(c) ** 2
    if rank:
        power = power.reshape((-1,) + grid.shape).sum(axis=0)
    w = grid.weights * (1.0 + grid.k_sq) ** (-s)
    return grid.parseval_factor * float((w * power).sum())


@dataclass(frozen=True)
class PressureBounds:
    """Terms of the elliptic control of ``A_h q`` in ``H^-1``.

    ``lhs <= tensor_hm1 + forcing_constant * forcing_hm2`` always holds; the
    Fourier-side constant is ``sqrt(1 + L^2)``.  ``tensor_ratio`` compares
    ``||w (x) w||_{H^-1}`` with ``||w|| ||grad w||``.
    """

    lhs: float
    tensor_hm1: float
    forcing_hm2: float
    forcing_constant: float
    grad_h_q: float
    tensor_ratio: float

    @property
    def rhs(self) -> float:
        return self.tensor_hm1 + self.forcing_constant * self.forcing_hm2

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def pressure_bounds(w: SpectralVectorField, f, p: SimParams) -> PressureBounds:
    g = w.grid
    f = _as_forcing(f, g)
    q = recover_pressure(w, f, p)
    Ahq = q.coeffs * filter_symbol(g, p.alpha)
    T = product_tensor(w, p.dealias)
    tensor = np.stack([T[min(i, j), max(i, j)] for i in range(3) for j in range(3)])
    grad_h_q = math.sqrt(_symbol_sum(q, g.kh_sq))
    nr = norms(w, p.alpha)
    t_hm1 = math.sqrt(_sobolev_sq(tensor, g, 1.0, 1))
    denom = nr.l2 * nr.grad
    return PressureBounds(
        lhs=math.sqrt(_sobolev_sq(Ahq, g, 1.0, 0)),
        tensor_hm1=t_hm1,
        forcing_hm2=math.sqrt(_sobolev_sq(f.field.coeffs, g, 2.0, 1)),
        forcing_constant=math.sqrt(1.0 + g.L**2),
        grad_h_q=grad_h_q,
        tensor_ratio=t_hm1 / denom if denom > 0 else 0.0,
    )


def horizontal_momentum_terms(w: SpectralVectorField, f, p: SimParams) -> np.ndarray:
    """``A_h^{-1} f + nu Lap w - grad q - A_h^{-1} div(w w)`` (all three components)."""
    g = w.grid
    f = _as_forcing(f, g)
    inv = 1.0 / filter_symbol(g, p.alpha)
    q = recover_pressure(w, f, p)
    return (
        f.field.coeffs * inv
        + p.nu * laplacian(w).coeffs
        - q.gradient().coeffs
        - product_divergence(w, p.dealias) * inv
    )


def momentum_residual(traj: Trajectory, f, p: SimParams | None, t: float) -> float:
    """Relative L^2 residual of the horizontal momentum balance at an interior sample.

    ``d_t w_h`` is the centered difference of neighbouring samples.
    """
    p = traj.params if p is None else p
    j = traj.index(t)
    if j == 0 or j == len(traj) - 1:
        raise ValueError("momentum_residual needs an interior sample (centered difference)")
    g = p.grid
    h = traj.sample_dt
    dwdt = (traj.states[j + 1] - traj.states[j - 1]) / (2.0 * h)
    balance = horizontal_momentum_terms(traj[j], f, p)
    res = SpectralVectorField(g, dwdt - balance).horizontal()
    a = math.sqrt(_symbol_sum(SpectralVectorField(g, dwdt).horizontal(), None))
    b = math.sqrt(_symbol_sum(SpectralVectorField(g, balance).horizontal(), None))
    scale = max(a, b)
    if scale == 0:
        return 0.0
    return math.sqrt(_symbol_sum(res, None)) / scale


@dataclass(frozen=True)
class ContinuityReport:
    """Sup-in-time V_h difference ratios of the horizontal velocity per perturbation size."""

    epsilons: tuple[float, ...]
    sup_vh_ratio: tuple[float, ...]

    @property
    def consistent(self) -> bool:
        """Ratios finite and never growing by more than 2x as epsilon decreases."""
        r = np.asarray(self.sup_vh_ratio)
        if not np.all(np.isfinite(r)):
            return False
        return bool(np.all(r[1:] <= 2.0 * r[:-1] + 1e-300)) if len(r) > 1 else True

    @property
    def label(self) -> str:
        return "consistent with continuity" if self.consistent else "inconsistent with continuity"

    def relative_variation(self) -> float:
        """``|r_last - r_prev| / r_prev`` for the two smallest perturbations."""
        if len(self.sup_vh_ratio) < 2:
            return 0.0
        a, b = self.sup_vh_ratio[-2], self.sup_vh_ratio[-1]
        return abs(b - a) / a if a else (0.0 if b == 0 else math.inf)


def continuity_modulus(
    w0: SpectralVectorField,
    direction: SpectralVectorField,
    epsilons,
    f,
    p: SimParams,
) -> ContinuityReport:
    """Compare runs from ``w0`` and ``w0 + eps * direction`` on ``[0, T]``."""
    eps = [float(e) for e in epsilons]
    if any(e < 0 for e in eps):
        raise ValueError("epsilons must be nonnegative")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    size = math.sqrt(_symbol_sum(direction, filter_symbol(direction.grid, p.alpha)))
    if abs(size - 1.0) > 1e-10:
        raise ValueError(f"direction must have unit V_h norm, got {size}")
    symbol = filter_symbol(p.grid, p.alpha)
    base = simulate(w0, f, p)
    ratios = []
    for e in eps:
        if e == 0:
            ratios.append(0.0)
            continue
        pert = simulate(w0 + direction * e, f, p)
        sup = 0.0
        for j in range(len(base)):
            d = SpectralVectorField(p.grid, pert.states[j] - base.states[j]).horizontal()
            sup = max(sup, _symbol_sum(d, symbol))
        ratios.append(math.sqrt(sup) / e)
    return ContinuityReport(tuple(eps), tuple(ratios))
