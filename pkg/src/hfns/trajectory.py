"""Time-sampled solution paths with a lazily filled norm cache."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import OffLatticeError
from .model import SimParams
from .spectral import SpectralVectorField, norms, NormReport

_LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class NormTable:
    """Column-wise norm cache: one array entry per sample."""

    l2: np.ndarray
    grad_h: np.ndarray
    grad: np.ndarray
    grad_h_grad: np.ndarray
    vh_sq: np.ndarray
    h2h_sq: np.ndarray

    def row(self, j: int) -> NormReport:
        return NormReport(*(float(getattr(self, f)[j]) for f in self.__dataclass_fields__))

    def slice(self, start: int, stop: int | None = None) -> NormTable:
        return NormTable(*(getattr(self, f)[start:stop] for f in self.__dataclass_fields__))


class Trajectory:
    """States at ``t0 + j * sample_dt`` for ``j = 0 .. len - 1``.

    All time arguments taken by methods are *local*: measured from the first
    sample, so that a shifted trajectory is again a path starting at 0.
    ``start_index`` records the absolute position on the sample lattice.
    """

    def __init__(self, params: SimParams, states, start_index: int = 0, *, _norms: NormTable | None = None):
        states = np.asarray(states, dtype=np.complex128)
        g = params.grid
        if states.ndim != 5 or states.shape[1:] != (3,) + g.shape or states.shape[0] < 1:
            raise ValueError(f"states must have shape (m, 3) + {g.shape}, got {states.shape}")
        if start_index < 0:
            raise ValueError("start_index must be >= 0")
        states = states.view()
        states.setflags(write=False)
        self.params = params
        self.states = states
        self.start_index = int(start_index)
        if _norms is not None:
            self.__dict__["norm_table"] = _norms

    @classmethod
    def from_fields(cls, params: SimParams, fields, start_index: int = 0) -> Trajectory:
        return cls(params, np.stack([f.coeffs for f in fields]), start_index)

    @classmethod
    def constant(cls, params: SimParams, w: SpectralVectorField, n_samples: int) -> Trajectory:
        return cls(params, np.broadcast_to(w.coeffs, (n_samples,) + w.coeffs.shape).copy())

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, j: int) -> SpectralVectorField:
        return SpectralVectorField(self.params.grid, self.states[j])

    def __iter__(self):
        return (self[j] for j in range(len(self)))

    @property
    def sample_dt(self) -> float:
        return self.params.sample_dt

    @property
    def t0(self) -> float:
        return self.start_index * self.sample_dt

    @property
    def span(self) -> float:
        return (len(self) - 1) * self.sample_dt

    @property
    def local_times(self) -> np.ndarray:
        return np.arange(len(self)) * self.sample_dt

    @property
    def times(self) -> np.ndarray:
        return (self.start_index + np.arange(len(self))) * self.sample_dt

    def index(self, t: float) -> int:
        """Sample index of local time ``t``; raises if off the lattice or span."""
        x = t / self.sample_dt
        j = int(round(x))
        if abs(x - j) > _LATTICE_TOL * max(1.0, abs(x)):
            raise OffLatticeError(f"t = {t} is not a multiple of sample_dt = {self.sample_dt}")
        if j < 0 or j >= len(self):
            raise OffLatticeError(f"t = {t} lies outside the trajectory span [0, {self.span}]")
        return j

    def at(self, t: float) -> SpectralVectorField:
        return self[self.index(t)]

    @cached_property
    def norm_table(self) -> NormTable:
        a = self.params.alpha
        reports = [norms(w, a) for w in self]
        cols = {f: np.array([getattr(r, f) for r in reports]) for f in NormTable.__dataclass_fields__}
        return NormTable(**cols)

    def norm_report(self, t: float) -> NormReport:
        return self.norm_table.row(self.index(t))

    def sliced(self, start: int, stop: int | None = None) -> Trajectory:
        """Sub-trajectory of samples ``start:stop`` sharing storage."""
        norms_cache = self.__dict__.get("norm_table")
        if norms_cache is not None:
            norms_cache = norms_cache.slice(start, stop)
        return Trajectory(
            self.params,
            self.states[start:stop],
            self.start_index + start,
            _norms=norms_cache,
        )
