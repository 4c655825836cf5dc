"""Shared fixtures and independent oracles.

The oracles work on the *full* complex spectrum obtained with ``numpy.fft.fftn``
of physical samples, so they share no code path with the package's real
(half-spectrum) transforms.
"""

from __future__ import annotations

import numpy as np
import pytest

from hfns import SimParams, SpectralVectorField, make_grid, random_solenoidal

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------- oracles


def full_spectrum(values: np.ndarray) -> np.ndarray:
    """Normalized Fourier amplitudes ``a(k)`` with ``u(x) = sum_k a(k) e^{i k.x/L}``."""
    n = values.shape[-1]
    return np.fft.fftn(values, axes=(-3, -2, -1)) / n**3


def integer_modes(n: int) -> np.ndarray:
    """Integer wavenumbers of ``fftn`` layout, shape (3, n, n, n)."""
    k = np.fft.fftfreq(n, 1.0 / n)
    return np.stack(np.meshgrid(k, k, k, indexing="ij"))


def quadrature_l2_sq(values: np.ndarray, L: float = 1.0) -> float:
    """Trapezoidal rule on the collocation grid (exact for band-limited data)."""
    n = values.shape[-1]
    return float((values**2).sum() * (2 * np.pi * L / n) ** 3)


def spectral_derivative(values: np.ndarray, axis: int, L: float = 1.0) -> np.ndarray:
    """Derivative along ``axis`` (0, 1, 2 = x1, x2, x3) through the full complex FFT."""
    n = values.shape[-1]
    k = integer_modes(n)[axis] / L
    k[np.abs(integer_modes(n)[axis]) == n // 2] = 0.0
    hat = np.fft.fftn(values, axes=(-3, -2, -1))
    return np.real(np.fft.ifftn(1j * k * hat, axes=(-3, -2, -1)))


def direct_nonlinear_term(w: SpectralVectorField, alpha: float, band: int) -> np.ndarray:
    """``-P A_h^{-1} div(w (x) w)`` by an explicit O(M^2) convolution sum.

    Inputs are assumed to live on ``|k_i| <= band``; the product is truncated
    to the same band (two-thirds rule).  Returns full-spectrum amplitudes on
    the ``fftn`` layout of ``w``'s grid.
    """
    g = w.grid
    n, L = g.n, g.L
    a = full_spectrum(w.physical())
    kint = integer_modes(n).astype(int)
    sel = np.all(np.abs(kint) <= band, axis=0) & np.any(np.abs(a) > 0, axis=0)
    modes = kint[:, sel].T  # (M, 3)
    amps = a[:, sel].T  # (M, 3)
    out = np.zeros((3, n, n, n), dtype=complex)
    for p_idx in range(len(modes)):
        kk = modes[p_idx] + modes  # (M, 3)
        keep = np.all(np.abs(kk) <= band, axis=1)
        kk = kk[keep]
        # T_ij(p + q) += a_i(p) a_j(q); div_i(k) = sum_j i k_j T_ij(k)
        kdota = (kk * amps[keep]).sum(axis=1)  # k_j a_j(q) per pair
        div = amps[p_idx][:, None] * (1j * kdota / L)[None, :]
        idx = tuple((kk % n).T)
        for i in range(3):
            np.add.at(out[i], idx, div[i])
    K = kint / L
    ksq = (K**2).sum(axis=0)
    khsq = K[0] ** 2 + K[1] ** 2
    out = -out / (1.0 + alpha**2 * khsq)
    safe = np.where(ksq > 0, ksq, 1.0)
    kdot = (K * out).sum(axis=0)
    out = out - K * kdot / safe
    out[:, 0, 0, 0] = 0.0
    return out


def band_limited(grid, seed, band=None):
    """Random divergence-free field supported on ``|k_i| <= band`` (default: dealias band)."""
    band = grid.dealias_kmax if band is None else band
    k1, k2, k3 = grid.integer_wavenumbers
    mask = (np.abs(k1) <= band) & (np.abs(k2) <= band) & (k3 <= band)
    u = random_solenoidal(grid, seed)
    return SpectralVectorField(grid, u.coeffs * mask)


def max_rel(a, b) -> float:
    scale = max(np.abs(a).max(), np.abs(b).max())
    return 0.0 if scale == 0 else float(np.abs(a - b).max() / scale)


# ---------------------------------------------------------------- fixtures


@pytest.fixture(scope="session")
def grid8():
    return make_grid(8)


@pytest.fixture(scope="session")
def grid16():
    return make_grid(16)


@pytest.fixture
def rand_field():
    def make(grid, seed, **kw):
        return random_solenoidal(grid, seed, **kw)

    return make


@pytest.fixture
def small_params():
    return SimParams(nu=0.1, alpha=0.1, n=8, dt=1e-2, T=0.5)
