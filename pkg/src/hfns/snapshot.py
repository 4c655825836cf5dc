"""
Binary snapshot container.

One record is::

    magic      6 bytes   b"HFNS1\\0"
    n          int64     points per axis
    count      int64     number of lattice wavevectors in the payload, (n-1)^3
    L, alpha, nu, time   float64 each
    payload    count x 3 x 2 float64: for every k = (k1, k2, k3) with
               |k_i| <= n/2 - 1 in lexicographic order, the three velocity
               components as (real, imag) pairs

All numbers are little-endian.  A trajectory file is a plain concatenation
of records, one per sample, in time order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import BadMagicError, DimensionMismatchError, ShortReadError, SnapshotError
from .model import SimParams
from .spectral import Grid, SpectralVectorField, make_grid
from .trajectory import Trajectory

MAGIC = b"HFNS1\0"
_HEADER = struct.Struct("<qqdddd")


@dataclass(frozen=True)
class Snapshot:
    state: SpectralVectorField
    alpha: float
    nu: float
    time: float


def _lattice_index(grid: Grid):
    lat = grid.lattice()
    neg = lat[:, 2] < 0
    src = np.where(neg[:, None], -lat, lat)
    n = grid.n
    return (src[:, 0] % n, src[:, 1] % n, src[:, 2]), neg


def _encode(state: SpectralVectorField) -> bytes:
    g = state.grid
    (i1, i2, i3), neg = _lattice_index(g)
    vals = state.coeffs[:, i1, i2, i3].T.copy()  # (M, 3)
    vals[neg] = np.conj(vals[neg])
    return vals.astype("<c16").tobytes()


def _decode(buf: bytes, grid: Grid) -> SpectralVectorField:
    vals = np.frombuffer(buf, dtype="<c16").reshape(-1, 3)
    (i1, i2, i3), neg = _lattice_index(grid)
    c = np.zeros((3,) + grid.shape, dtype=np.complex128)
    pos = ~neg
    c[:, i1[pos], i2[pos], i3[pos]] = vals[pos].T
    mirrored = np.conj(c[:, i1[neg], i2[neg], i3[neg]]).T
    if not np.array_equal(mirrored, vals[neg]):
        raise SnapshotError("payload is not conjugate-symmetric")
    return SpectralVectorField(grid, c)


def write_record(fh, state: SpectralVectorField, *, alpha: float = 0.0, nu: float = 0.0, time: float = 0.0) -> None:
    g = state.grid
    fh.write(MAGIC)
    fh.write(_HEADER.pack(g.n, (g.n - 1) ** 3, g.L, alpha, nu, time))
    fh.write(_encode(state))


def _read_exact(fh, size: int, what: str) -> bytes:
    buf = fh.read(size)
    if len(buf) != size:
        raise ShortReadError(f"short read in {what}: expected {size} bytes, got {len(buf)}")
    return buf


def read_record(fh) -> Snapshot | None:
    """Read one record; ``None`` at a clean end of file."""
    magic = fh.read(len(MAGIC))
    if not magic:
        return None
    if len(magic) < len(MAGIC):
        raise ShortReadError("short read in magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r} (expected {MAGIC!r}); unsupported version or not a snapshot")
    n, count, L, alpha, nu, time = _HEADER.unpack(_read_exact(fh, _HEADER.size, "header"))
    try:
        grid = make_grid(n, L)
    except ValueError as exc:
        raise DimensionMismatchError(f"invalid header: {exc}") from None
    if count != (n - 1) ** 3:
        raise DimensionMismatchError(
            f"header declares n = {n} ({(n - 1) ** 3} wavevectors) but payload holds {count}"
        )
    payload = _read_exact(fh, count * 3 * 16, "payload")
    return Snapshot(_decode(payload, grid), alpha, nu, time)


def store_snapshot(state: SpectralVectorField, path, *, alpha: float = 0.0, nu: float = 0.0, time: float = 0.0) -> None:
    with Path(path).open("wb") as fh:
        write_record(fh, state, alpha=alpha, nu=nu, time=time)


def load_snapshot(path) -> Snapshot:
    with Path(path).open("rb") as fh:
        snap = read_record(fh)
        if snap is None:
            raise ShortReadError("empty snapshot file")
        if fh.read(1):
            raise SnapshotError("trailing data after snapshot record")
    return snap


def store_trajectory(traj: Trajectory, path) -> None:
    p = traj.params
    with Path(path).open("wb") as fh:
        for t, w in zip(traj.times, traj):
            write_record(fh, w, alpha=p.alpha, nu=p.nu, time=float(t))


def load_trajectory(path, params: SimParams) -> Trajectory:
    """Read a trajectory file; grid, alpha, nu and sample spacing must match ``params``."""
    snaps = []
    with Path(path).open("rb") as fh:
        while (snap := read_record(fh)) is not None:
            snaps.append(snap)
    if not snaps:
        raise ShortReadError("trajectory file holds no records")
    g = params.grid
    for s in snaps:
        if s.state.grid != g:
            raise DimensionMismatchError(f"record grid {s.state.grid} does not match {g}")
        if s.alpha != params.alpha or s.nu != params.nu:
            raise SnapshotError("record alpha/nu differ from the run parameters")
    times = np.array([s.time for s in snaps])
    start = int(round(times[0] / params.sample_dt))
    expected = (start + np.arange(len(snaps))) * params.sample_dt
    if not np.allclose(times, expected, rtol=1e-12, atol=1e-12 * params.sample_dt):
        raise SnapshotError("record times are not on the sample lattice of the run parameters")
    return Trajectory(params, np.stack([s.state.coeffs for s in snaps]), start)
