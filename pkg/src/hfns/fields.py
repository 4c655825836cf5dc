"""Named velocity and forcing fields used as initial data and test states."""

from __future__ import annotations

import numpy as np

from .spectral import Grid, SpectralVectorField, leray_project, norms


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralVectorField:
    """``amplitude * (sin x1 cos x2, -cos x1 sin x2, 0)`` with ``x`` scaled by ``1/L``."""
    x1, x2, _ = (c / grid.L for c in grid.coordinates)
    shape = (grid.n,) * 3
    u = np.zeros((3,) + shape)
    u[0] = np.broadcast_to(np.sin(x1) * np.cos(x2), shape)
    u[1] = np.broadcast_to(-np.cos(x1) * np.sin(x2), shape)
    return SpectralVectorField.from_physical(grid, amplitude * u)


def single_mode(grid: Grid, k, amplitude: float = 1.0, direction=(1.0, 0.0, 0.0)) -> SpectralVectorField:
    """``amplitude * e * sin(k . x / L)`` with ``e`` the normalized direction.

    ``k`` is an integer triple inside the retained lattice and ``e`` must be
    orthogonal to it so that the mode is divergence-free.
    """
    k = np.asarray(k, dtype=np.int64)
    e = np.asarray(direction, dtype=float)
    if k.shape != (3,) or e.shape != (3,):
        raise ValueError("k and direction must be triples")
    if not np.any(k):
        raise ValueError("k = 0 is not a velocity mode (zero-mean space)")
    if np.max(np.abs(k)) > grid.kmax:
        raise ValueError(f"mode {tuple(k)} lies outside the retained lattice |k_i| <= {grid.kmax}")
    enorm = np.linalg.norm(e)
    if enorm == 0:
        raise ValueError("direction must be nonzero")
    e = e / enorm
    if abs(float(k @ e)) > 1e-12 * np.linalg.norm(k):
        raise ValueError(f"direction {tuple(direction)} is not orthogonal to k = {tuple(k)}")
    x1, x2, x3 = grid.coordinates
    phase = (k[0] * x1 + k[1] * x2 + k[2] * x3) / grid.L
    s = np.broadcast_to(np.sin(phase), (grid.n,) * 3)
    u = amplitude * e[:, None, None, None] * s
    c = SpectralVectorField.from_physical(grid, u).coeffs.copy()
    # keep only +-k so the field is an exact single mode (no transform round-off elsewhere)
    keep = np.zeros(grid.shape, dtype=bool)
    n = grid.n
    for sign in (1, -1):
        k1, k2, k3 = sign * k
        if k3 >= 0:
            keep[k1 % n, k2 % n, k3] = True
    np.copyto(c, 0.0, where=~keep)
    return SpectralVectorField(grid, c)


def random_solenoidal(
    grid: Grid,
    seed: int,
    spectrum_slope: float = 5.0 / 3.0,
    cutoff: float | None = None,
    amplitude: float = 1.0,
) -> SpectralVectorField:
    """Random divergence-free field with energy spectrum ``~ |k|^-spectrum_slope``.

    Modes with integer wavenumber magnitude above ``cutoff`` are zero.  The
    result is scaled to ``||u|| = amplitude`` and is fully determined by ``seed``.
    """
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((3,) + grid.shape) + 1j * rng.standard_normal((3,) + grid.shape)
    kmag = np.sqrt(grid.k_sq) * grid.L
    safe = np.where(kmag > 0, kmag, 1.0)
    # shell energy 4 pi k^2 |c|^2 ~ k^-slope
    c *= safe ** (-(spectrum_slope + 2.0) / 2.0)
    if cutoff is not None:
        c *= kmag <= cutoff
    u = SpectralVectorField(grid, c, clean=True)
    u = leray_project(u)
    size = norms(u, 0.0).l2
    if size == 0:
        return u
    return u * (amplitude / size)
