"""
Fourier representation of real fields on the triply periodic box.

Storage follows the real-to-complex FFT layout: a velocity field is an
array of shape ``(3, n, n, n//2 + 1)`` holding the *unnormalized* forward
transform of its collocation values (the inverse transform divides by
``n**3``).  The physical box is ``[0, 2*pi*L)^3``, which on the torus is the
same as ``(-pi*L, pi*L)^3``; wavenumbers are integer triples scaled by
``1/L``.

Only the symmetric lattice ``|k_i| <= n/2 - 1`` is retained.  The unmatched
Nyquist plane of every axis is pinned to zero, as is the k = 0 mode of
velocity fields, so that conjugate symmetry is exact and every field is
mean-free.

Parseval constants live in one place (:func:`inner`): the integral of
``u.v`` over the box is ``(2 pi L)^3 / n^6 * sum_k weight(k) Re(conj(u_k) v_k)``
where ``weight`` is 2 on the half-space ``k_3 > 0`` and 1 on ``k_3 = 0``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft

from .exceptions import HorizontalMeanError

__all__ = [
    "Grid",
    "make_grid",
    "SpectralVectorField",
    "SpectralScalarField",
    "NormReport",
    "apply_horizontal_filter",
    "apply_horizontal_filter_inverse",
    "leray_project",
    "norms",
    "inner",
    "lambda_h_power",
    "laplacian",
    "divergence_residual",
    "fft_workers",
]


def fft_workers() -> int:
    """Number of FFT worker threads, capped by ``HFNS_THREADS`` when set."""
    cap = os.environ.get("HFNS_THREADS")
    available = os.cpu_count() or 1
    if cap:
        try:
            return max(1, min(available, int(cap)))
        except ValueError:
            pass
    return available


@dataclass(frozen=True)
class Grid:
    """Truncated wavenumber lattice of an ``n**3`` collocation grid."""

    n: int
    L: float = 1.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError(f"n must be an integer, got {self.n!r}")
        if self.n < 4 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 4, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive and finite, got {self.L}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "L", float(self.L))

    @property
    def kmax(self) -> int:
        """Largest retained integer wavenumber per axis."""
        return self.n // 2 - 1

    @property
    def dealias_kmax(self) -> int:
        """Largest integer wavenumber kept by the two-thirds rule (3K < n)."""
        return (self.n - 1) // 3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @property
    def volume(self) -> float:
        return (2.0 * math.pi * self.L) ** 3

    @property
    def lambda1(self) -> float:
        """Smallest nonzero eigenvalue of -Laplacian on mean-free fields."""
        return 1.0 / self.L**2

    @cached_property
    def integer_wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n
        k1 = np.fft.fftfreq(n, 1.0 / n).round().astype(np.int64)
        k3 = np.arange(n // 2 + 1, dtype=np.int64)
        return (
            k1.reshape(n, 1, 1),
            k1.reshape(1, n, 1),
            k3.reshape(1, 1, n // 2 + 1),
        )

    @cached_property
    def K(self) -> np.ndarray:
        """Physical wavevectors, shape ``(3, n, n, n//2+1)``."""
        k1, k2, k3 = self.integer_wavenumbers
        K = np.stack(np.broadcast_arrays(k1, k2, k3)).astype(float) / self.L
        K.setflags(write=False)
        return K

    @cached_property
    def kh_sq(self) -> np.ndarray:
        K = self.K
        out = K[0] ** 2 + K[1] ** 2
        out.setflags(write=False)
        return out

    @cached_property
    def k_sq(self) -> np.ndarray:
        out = self.kh_sq + self.K[2] ** 2
        out.setflags(write=False)
        return out

    @cached_property
    def k_sq_safe(self) -> np.ndarray:
        out = self.k_sq.copy()
        out[0, 0, 0] = 1.0
        out.setflags(write=False)
        return out

    @cached_property
    def retained(self) -> np.ndarray:
        k1, k2, k3 = self.integer_wavenumbers
        m = self.kmax
        out = (np.abs(k1) <= m) & (np.abs(k2) <= m) & (np.abs(k3) <= m)
        out.setflags(write=False)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        k1, k2, k3 = self.integer_wavenumbers
        m = self.dealias_kmax
        out = (np.abs(k1) <= m) & (np.abs(k2) <= m) & (np.abs(k3) <= m)
        out.setflags(write=False)
        return out

    @cached_property
    def weights(self) -> np.ndarray:
        """Half-spectrum multiplicity (2 for k_3 > 0) restricted to the lattice."""
        _, _, k3 = self.integer_wavenumbers
        w = np.where(k3 > 0, 2.0, 1.0) * self.retained
        w.setflags(write=False)
        return w

    @property
    def parseval_factor(self) -> float:
        return self.volume / float(self.n) ** 6

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Collocation points ``x_j = 2 pi L j / n`` as broadcastable arrays."""
        x = 2.0 * math.pi * self.L * np.arange(self.n) / self.n
        return x.reshape(-1, 1, 1), x.reshape(1, -1, 1), x.reshape(1, 1, -1)

    def lattice(self) -> np.ndarray:
        """Retained integer triples in lexicographic order, shape ``(M, 3)``."""
        r = np.arange(-self.kmax, self.kmax + 1)
        return np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)


@lru_cache(maxsize=32)
def make_grid(n: int, L: float = 1.0) -> Grid:
    """Return the (cached) grid with ``n`` points per axis and period ``2 pi L``."""
    return Grid(n, L)


def _hermitian(c: np.ndarray, grid: Grid) -> np.ndarray:
    """Enforce exact conjugate symmetry on the k_3 = 0 plane, in place."""
    idx = (-np.arange(grid.n)) % grid.n
    plane = c[..., 0]
    flipped = plane[..., idx, :][..., idx]
    c[..., 0] = 0.5 * (plane + np.conj(flipped))
    return c


def _truncate(c: np.ndarray, grid: Grid) -> np.ndarray:
    """Zero everything off the retained lattice, in place, as +0.0."""
    np.copyto(c, 0.0, where=~grid.retained)
    return c


def _clean(c: np.ndarray, grid: Grid, zero_mean: bool = True) -> np.ndarray:
    _truncate(c, grid)
    _hermitian(c, grid)
    if zero_mean:
        c[..., 0, 0, 0] = 0.0
    return c


def forward(values: np.ndarray) -> np.ndarray:
    """Unnormalized real-to-complex transform over the last three axes."""
    return scipy.fft.rfftn(values, axes=(-3, -2, -1), workers=fft_workers())


def backward(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse of :func:`forward` (divides by the mode count)."""
    return scipy.fft.irfftn(coeffs, s=(grid.n,) * 3, axes=(-3, -2, -1), workers=fft_workers())


class _Field:
    _rank: int = 0

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: Grid, coeffs, *, clean: bool = False, zero_mean: bool = True):
        expected = (3,) * self._rank + grid.shape
        arr = np.array(coeffs, dtype=np.complex128)
        if arr.shape != expected:
            raise ValueError(f"coefficient array has shape {arr.shape}, expected {expected}")
        if clean:
            _clean(arr, grid, zero_mean)
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros((3,) * cls._rank + grid.shape, dtype=np.complex128))

    @classmethod
    def from_physical(cls, grid: Grid, values, *, zero_mean: bool = True):
        """Transform collocation values; truncate to the lattice and symmetrize."""
        values = np.asarray(values, dtype=float)
        expected = (3,) * cls._rank + (grid.n,) * 3
        if values.shape != expected:
            raise ValueError(f"physical array has shape {values.shape}, expected {expected}")
        return cls(grid, forward(values), clean=True, zero_mean=zero_mean)

    def physical(self) -> np.ndarray:
        return backward(self.coeffs, self.grid)

    def _like(self, coeffs):
        return type(self)(self.grid, coeffs)

    def _check(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return self._like(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._like(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._like(self.coeffs / scalar)

    def __neg__(self):
        return self._like(-self.coeffs)

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0


class SpectralVectorField(_Field):
    """Real, mean-free vector field stored as half-spectrum coefficients."""

    _rank = 1
    __slots__ = ()

    def component(self, i: int) -> SpectralScalarField:
        return SpectralScalarField(self.grid, self.coeffs[i])

    def horizontal(self) -> SpectralVectorField:
        """The field ``(w_1, w_2, 0)``."""
        c = self.coeffs.copy()
        c[2] = 0.0
        return SpectralVectorField(self.grid, c)


class SpectralScalarField(_Field):
    """Real scalar field (zero mean unless constructed otherwise)."""

    _rank = 0
    __slots__ = ()

    def gradient(self) -> SpectralVectorField:
        return SpectralVectorField(self.grid, 1j * self.grid.K * self.coeffs)


@dataclass(frozen=True)
class NormReport:
    """Norms of one velocity state; ``vh_sq`` and ``h2h_sq`` use the filter width."""

    l2: float
    grad_h: float
    grad: float
    grad_h_grad: float
    vh_sq: float
    h2h_sq: float


def _symbol_sum(field: _Field, symbol) -> float:
    """Parseval sum of ``symbol(k) |c_k|^2`` over the lattice, with volume factor."""
    g = field.grid
    power = np.abs(field.coeffs) ** 2
    if field._rank:
        power = power.sum(axis=0)
    weighted = g.weights * power
    if symbol is not None:
        weighted = weighted * symbol
    return g.parseval_factor * float(weighted.sum())


def inner(u: _Field, v: _Field) -> float:
    """L^2 inner product over the box."""
    if u.grid != v.grid:
        raise ValueError("fields live on different grids")
    prod = np.real(np.conj(u.coeffs) * v.coeffs)
    if u._rank:
        prod = prod.sum(axis=0)
    return u.grid.parseval_factor * float((u.grid.weights * prod).sum())


def norms(w: SpectralVectorField, alpha: float) -> NormReport:
    g = w.grid
    l2_sq = _symbol_sum(w, None)
    gh_sq = _symbol_sum(w, g.kh_sq)
    g_sq = _symbol_sum(w, g.k_sq)
    ghg_sq = _symbol_sum(w, g.kh_sq * g.k_sq)
    a2 = alpha * alpha
    return NormReport(
        l2=math.sqrt(l2_sq),
        grad_h=math.sqrt(gh_sq),
        grad=math.sqrt(g_sq),
        grad_h_grad=math.sqrt(ghg_sq),
        vh_sq=l2_sq + a2 * gh_sq,
        h2h_sq=g_sq + a2 * ghg_sq,
    )


def vh_norm_sq(w: SpectralVectorField, alpha: float) -> float:
    """``||w||^2 + alpha^2 ||grad_h w||^2`` without the other norms."""
    return _symbol_sum(w, 1.0 + alpha * alpha * w.grid.kh_sq)


def filter_symbol(grid: Grid, alpha: float) -> np.ndarray:
    """Symbol ``1 + alpha^2 |k_h|^2`` of the horizontal Helmholtz operator."""
    return 1.0 + alpha * alpha * grid.kh_sq


def _check_alpha(alpha):
    if not alpha >= 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")


def apply_horizontal_filter(u, alpha: float):
    """Apply ``A_h = I - alpha^2 Delta_h``."""
    _check_alpha(alpha)
    return u._like(u.coeffs * filter_symbol(u.grid, alpha))


def apply_horizontal_filter_inverse(u, alpha: float):
    """Apply the smoothing filter ``A_h^{-1}``."""
    _check_alpha(alpha)
    return u._like(u.coeffs / filter_symbol(u.grid, alpha))


def _project(c: np.ndarray, grid: Grid) -> np.ndarray:
    K = grid.K
    kdotc = (K * c).sum(axis=0)
    return c - K * (kdotc / grid.k_sq_safe)


def leray_project(u: SpectralVectorField) -> SpectralVectorField:
    """L^2-orthogonal projection onto divergence-free fields."""
    return SpectralVectorField(u.grid, _project(u.coeffs, u.grid))


def laplacian(u):
    return u._like(-u.grid.k_sq * u.coeffs)


def divergence(u: SpectralVectorField) -> SpectralScalarField:
    return SpectralScalarField(u.grid, (1j * u.grid.K * u.coeffs).sum(axis=0))


def divergence_residual(u: SpectralVectorField) -> float:
    """``max_k |k . c_k| / max_k |k| |c_k|`` (0 for the zero field)."""
    g = u.grid
    num = np.abs((g.K * u.coeffs).sum(axis=0)).max()
    den = (np.sqrt(g.k_sq) * np.sqrt((np.abs(u.coeffs) ** 2).sum(axis=0))).max()
    return float(num / den) if den > 0 else 0.0


def lambda_h_power(f, s: float):
    """Apply ``Lambda_h^s = (-Delta_h)^{s/2}``, symbol ``|k_h|^s``.

    Negative powers are only defined when ``f`` carries nothing on the
    horizontal-mean modes ``k_1 = k_2 = 0``.
    """
    g = f.grid
    kh = np.sqrt(g.kh_sq)
    if s == 0:
        return f._like(f.coeffs)
    if s > 0:
        return f._like(f.coeffs * kh**s)
    flat = g.kh_sq == 0
    c = f.coeffs
    if np.any(c[..., flat] != 0):
        raise HorizontalMeanError(
            "horizontal-mean obstruction: negative power of Lambda_h applied to a field "
            "with energy on k_h = 0 modes"
        )
    symbol = np.zeros_like(kh)
    np.power(kh, s, out=symbol, where=~flat)
    return f._like(c * symbol)
