"""
Right-hand side and time integration of the horizontally filtered model

    d_t w + A_h^{-1} div(w (x) w) - nu Lap w + grad q = A_h^{-1} f,   div w = 0,

with the pressure removed by Leray projection.  Time stepping uses an exact
integrating factor for the viscous term and second-order Adams-Bashforth
for the filtered nonlinearity and forcing (forward Euler startup).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BlowUpError, HorizontalMeanError
from .spectral import (
    Grid,
    SpectralVectorField,
    _hermitian,
    _project,
    _truncate,
    backward,
    divergence_residual,
    filter_symbol,
    forward,
    make_grid,
)

DEALIAS_RULES = ("two-thirds", "none")
_LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class SimParams:
    nu: float
    alpha: float
    L: float = 1.0
    n: int = 32
    dt: float = 1e-3
    T: float = 1.0
    sample_dt: float | None = None
    dealias: str = "two-thirds"

    def __post_init__(self):
        if not (self.nu > 0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.T >= 0:
            raise ValueError(f"T must be >= 0, got {self.T}")
        if self.dealias not in DEALIAS_RULES:
            raise ValueError(f"dealias must be one of {DEALIAS_RULES}, got {self.dealias!r}")
        if self.sample_dt is None:
            object.__setattr__(self, "sample_dt", float(self.dt))
        ratio = self.sample_dt / self.dt
        if round(ratio) < 1 or abs(ratio - round(ratio)) > _LATTICE_TOL * max(1.0, ratio):
            raise ValueError(
                f"sample_dt / dt must be a positive integer, got {self.sample_dt} / {self.dt}"
            )
        self.grid  # validates n and L

    @property
    def grid(self) -> Grid:
        return make_grid(self.n, self.L)

    @property
    def stride(self) -> int:
        """Time steps per trajectory sample."""
        return int(round(self.sample_dt / self.dt))

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.T / self.sample_dt + _LATTICE_TOL)) + 1


@dataclass(frozen=True, eq=False)
class Forcing:
    """Time-independent, divergence-free forcing with no horizontal-mean modes."""

    field: SpectralVectorField

    def __post_init__(self):
        g = self.field.grid
        c = self.field.coeffs
        if np.any(c[:, g.kh_sq == 0] != 0):
            raise HorizontalMeanError(
                "horizontal-mean obstruction: forcing has energy on k_1 = k_2 = 0 modes (K1 undefined)"
            )
        if divergence_residual(self.field) > 1e-12:
            raise ValueError("forcing must be divergence-free")

    @classmethod
    def zero(cls, grid: Grid) -> Forcing:
        return cls(SpectralVectorField.zeros(grid))

    @property
    def grid(self) -> Grid:
        return self.field.grid


def _as_forcing(f, grid: Grid) -> Forcing:
    if f is None:
        return Forcing.zero(grid)
    if isinstance(f, SpectralVectorField):
        return Forcing(f)
    return f


def product_divergence(w: SpectralVectorField, dealias: str = "two-thirds") -> np.ndarray:
    """Coefficients of ``div(w (x) w)`` by the pseudo-spectral product.

    With the two-thirds rule the input is truncated to ``|k_i| <= (n-1)//3``
    and so is the output, which makes the result equal to the exact
    convolution on every retained mode.
    """
    g = w.grid
    c = w.coeffs * g.dealias_mask if dealias == "two-thirds" else w.coeffs
    u = backward(c, g)
    K = g.K
    out = np.zeros((3,) + g.shape, dtype=np.complex128)
    for i in range(3):
        for j in range(i, 3):
            t = forward(u[i] * u[j])
            out[i] += 1j * K[j] * t
            if j != i:
                out[j] += 1j * K[i] * t
    if dealias == "two-thirds":
        out *= g.dealias_mask
    _truncate(out, g)
    _hermitian(out, g)
    out[:, 0, 0, 0] = 0.0
    return out


def product_tensor(w: SpectralVectorField, dealias: str = "two-thirds") -> dict[tuple[int, int], np.ndarray]:
    """Coefficients of the symmetric tensor ``w_i w_j`` (``i <= j``), dealiased like :func:`product_divergence`."""
    g = w.grid
    c = w.coeffs * g.dealias_mask if dealias == "two-thirds" else w.coeffs
    u = backward(c, g)
    out = {}
    for i in range(3):
        for j in range(i, 3):
            t = forward(u[i] * u[j])
            if dealias == "two-thirds":
                t *= g.dealias_mask
            _truncate(t, g)
            out[i, j] = _hermitian(t, g)
    return out


def nonlinear_term(w: SpectralVectorField, p: SimParams) -> SpectralVectorField:
    """``-P A_h^{-1} div(w (x) w)``."""
    g = w.grid
    c = -product_divergence(w, p.dealias) / filter_symbol(g, p.alpha)
    return SpectralVectorField(g, _project(c, g))


def rhs(w: SpectralVectorField, f, p: SimParams) -> SpectralVectorField:
    """Full tendency ``nonlinear_term + nu Lap w + P A_h^{-1} f``."""
    g = w.grid
    f = _as_forcing(f, g)
    forced = _project(f.field.coeffs / filter_symbol(g, p.alpha), g)
    viscous = -p.nu * g.k_sq * w.coeffs
    return SpectralVectorField(g, nonlinear_term(w, p).coeffs + viscous + forced)


def explicit_tendency(w: SpectralVectorField, f, p: SimParams) -> SpectralVectorField:
    """The part of the tendency advanced explicitly (nonlinearity and forcing)."""
    g = w.grid
    f = _as_forcing(f, g)
    forced = _project(f.field.coeffs / filter_symbol(g, p.alpha), g)
    return SpectralVectorField(g, nonlinear_term(w, p).coeffs + forced)


def _check_finite(c: np.ndarray, step: int, time: float):
    if not np.all(np.isfinite(c)):
        raise BlowUpError(step, time)


def step(
    w: SpectralVectorField,
    f,
    p: SimParams,
    previous: SpectralVectorField | None = None,
    *,
    index: int = 0,
) -> SpectralVectorField:
    """Advance one time step.

    ``previous`` is the explicit tendency at the prior time level; without it
    the step is the first-order startup step.  ``index`` only labels a
    blow-up error.
    """
    g = w.grid
    E = np.exp(-p.nu * g.k_sq * p.dt)
    with np.errstate(over="ignore", invalid="ignore"):
        N = explicit_tendency(w, f, p).coeffs
        if previous is None:
            c = E * (w.coeffs + p.dt * N)
        else:
            c = E * w.coeffs + p.dt * (1.5 * E * N - 0.5 * E * E * previous.coeffs)
    _check_finite(c, index, index * p.dt)
    return SpectralVectorField(g, c)


class Integrator:
    """Stateful multistep integrator; remembers the previous explicit tendency."""

    def __init__(self, f, p: SimParams):
        self.params = p
        g = p.grid
        self.forcing = _as_forcing(f, g)
        self._E = np.exp(-p.nu * g.k_sq * p.dt)
        self._E2 = self._E * self._E
        self._forced = _project(self.forcing.field.coeffs / filter_symbol(g, p.alpha), g)
        self._inv_filter = 1.0 / filter_symbol(g, p.alpha)
        self._previous: np.ndarray | None = None
        self.steps_taken = 0

    def tendency(self, c: np.ndarray) -> np.ndarray:
        g = self.params.grid
        w = SpectralVectorField(g, c)
        nl = -product_divergence(w, self.params.dealias) * self._inv_filter
        return _project(nl, g) + self._forced

    def advance(self, c: np.ndarray) -> np.ndarray:
        """Advance raw coefficients by one step and return the new array."""
        p = self.params
        with np.errstate(over="ignore", invalid="ignore"):
            N = self.tendency(c)
            if self._previous is None:
                out = self._E * (c + p.dt * N)
            else:
                out = self._E * c + p.dt * (1.5 * self._E * N - 0.5 * self._E2 * self._previous)
        self._previous = N
        self.steps_taken += 1
        _check_finite(out, self.steps_taken, self.steps_taken * p.dt)
        return out


def simulate(w0: SpectralVectorField, f, p: SimParams, *, t0: float = 0.0):
    """Integrate from ``w0`` over ``[0, T]`` and return the sampled trajectory."""
    from .trajectory import Trajectory

    g = p.grid
    if w0.grid != g:
        raise ValueError("initial state grid does not match the parameters")
    if w0.coeffs[:, 0, 0, 0].any():
        raise ValueError("initial state must have zero mean")
    if divergence_residual(w0) > 1e-10:
        raise ValueError("initial state must be divergence-free")
    integ = Integrator(f, p)
    states = np.empty((p.n_samples, 3) + g.shape, dtype=np.complex128)
    states[0] = w0.coeffs
    c = w0.coeffs
    for j in range(1, p.n_samples):
        for _ in range(p.stride):
            c = integ.advance(c)
        states[j] = c
    return Trajectory(p, states, start_index=int(round(t0 / p.sample_dt)))
