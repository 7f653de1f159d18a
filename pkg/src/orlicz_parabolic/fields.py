"""Sampled spatial slices and space-time fields on uniform grids, with file I/O.

Grids are node-centred on the box ``[-R, R]^n`` (``n`` in {1, 2}) with
``N`` nodes per axis. Integrals over balls use cell-clipped weights: the
fraction of each node's cell inside the ball, estimated from ``4**n``
sub-samples per cell (exact trapezoid weights in 1-D).

Binary field format (all little-endian)::

    magic   4s   b"OPFD"
    version u16  1
    n       u16  spatial dimension
    R       f64  half-width of the box
    N       u32  nodes per axis
    dt      f64  time step between slices
    slices  u32  number of slices
    t_end   f64  time of the last slice
    payload f64  slices * N**n values, C order (slice, x[, y])
"""
from __future__ import annotations

import csv
import functools
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "SampledFunction",
    "SpaceTimeField",
    "ball_weights",
    "grid_axis",
    "write_binary",
    "read_binary",
    "write_csv",
    "read_csv",
]

_MAGIC = b"OPFD"
_HEADER = struct.Struct("<4sHHdIdId")
_SUB_OFFSETS = np.array([-0.375, -0.125, 0.125, 0.375])


def grid_axis(N: int, R: float) -> np.ndarray:
    return np.linspace(-R, R, N)


@functools.lru_cache(maxsize=64)
def _weights_cached(n: int, N: int, R: float, radius: float) -> np.ndarray:
    x = grid_axis(N, R)
    dx = x[1] - x[0]
    sub = (x[:, None] + _SUB_OFFSETS[None, :] * dx) ** 2  # (N, 4)
    if n == 1:
        frac = np.mean(sub <= radius**2 * (1 + 1e-12), axis=1)
        w = frac * dx
    else:
        r2 = sub[:, None, :, None] + sub[None, :, None, :]  # (Nx, Ny, 4, 4)
        frac = np.mean(r2 <= radius**2 * (1 + 1e-12), axis=(2, 3))
        w = frac * dx * dx
    w.setflags(write=False)
    return w


def ball_weights(n: int, N: int, R: float, radius: float | None = None) -> np.ndarray:
    """Quadrature weights for the ball of ``radius`` (default ``R``) on the grid."""
    if n not in (1, 2):
        raise ValueError("only n in {1, 2} is supported")
    return _weights_cached(int(n), int(N), float(R), float(R if radius is None else radius))


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of a function on the node grid of ``[-R, R]^n``."""

    values: np.ndarray
    R: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (1, 2) or (v.ndim == 2 and v.shape[0] != v.shape[1]):
            raise ValueError("values must be (N,) or (N, N)")
        if v.shape[0] < 2:
            raise ValueError("need at least two nodes per axis")
        if not np.all(np.isfinite(v)):
            raise ValueError("sampled values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def dx(self) -> float:
        return 2.0 * self.R / (self.N - 1)

    @property
    def axis(self) -> np.ndarray:
        return grid_axis(self.N, self.R)

    def radius_grid(self) -> np.ndarray:
        x = self.axis
        if self.n == 1:
            return np.abs(x)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return np.hypot(X, Y)

    def weights(self, radius: float | None = None) -> np.ndarray:
        return ball_weights(self.n, self.N, self.R, radius)

    @classmethod
    def from_callable(cls, fun, N: int, R: float, n: int = 1):
        x = grid_axis(N, R)
        if n == 1:
            return cls(np.asarray(fun(x), dtype=float) * np.ones_like(x), R)
        X, Y = np.meshgrid(x, x, indexing="ij")
        return cls(np.asarray(fun(X, Y), dtype=float) * np.ones_like(X), R)

    def __eq__(self, other):
        return (
            isinstance(other, SampledFunction)
            and self.R == other.R
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    """A stack of spatial slices at uniform times ``t_end - dt*(m-1-j)``."""

    values: np.ndarray
    R: float
    dt: float
    t_end: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim not in (2, 3):
            raise ValueError("values must be (slices, N) or (slices, N, N)")
        if v.ndim == 3 and v.shape[1] != v.shape[2]:
            raise ValueError("2-D slices must be square")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.ndim - 1

    @property
    def N(self) -> int:
        return self.values.shape[1]

    @property
    def slices(self) -> int:
        return self.values.shape[0]

    @property
    def dx(self) -> float:
        return 2.0 * self.R / (self.N - 1)

    @property
    def axis(self) -> np.ndarray:
        return grid_axis(self.N, self.R)

    @property
    def times(self) -> np.ndarray:
        return self.t_end - self.dt * np.arange(self.slices - 1, -1, -1)

    @property
    def T(self) -> float:
        return self.dt * (self.slices - 1)

    def slice(self, j: int) -> SampledFunction:
        return SampledFunction(self.values[j], self.R)

    def __iter__(self):
        for j in range(self.slices):
            yield self.slice(j)

    @classmethod
    def from_callable(cls, fun, N: int, R: float, times, n: int = 1):
        times = np.asarray(times, dtype=float)
        dt = times[1] - times[0] if times.size > 1 else 1.0
        x = grid_axis(N, R)
        if n == 1:
            vals = np.stack([np.asarray(fun(x, t), dtype=float) * np.ones_like(x) for t in times])
        else:
            X, Y = np.meshgrid(x, x, indexing="ij")
            vals = np.stack(
                [np.asarray(fun(X, Y, t), dtype=float) * np.ones_like(X) for t in times]
            )
        return cls(vals, R, dt, float(times[-1]))

    def __eq__(self, other):
        return (
            isinstance(other, SpaceTimeField)
            and self.R == other.R
            and self.dt == other.dt
            and self.t_end == other.t_end
            and np.array_equal(self.values, other.values)
        )


# persistence ---------------------------------------------------------------


def write_binary(field: SpaceTimeField, path) -> None:
    header = _HEADER.pack(
        _MAGIC, 1, field.n, field.R, field.N, field.dt, field.slices, field.t_end
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_binary(path) -> SpaceTimeField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated field file")
    magic, version, n, R, N, dt, slices, t_end = _HEADER.unpack_from(data)
    if magic != _MAGIC or version != 1:
        raise ValueError("not a field file (bad magic/version)")
    shape = (slices,) + (N,) * n
    payload = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if payload.size != int(np.prod(shape)):
        raise ValueError("payload size does not match header")
    return SpaceTimeField(payload.reshape(shape).astype(float), R, dt, t_end)


def write_csv(field: SpaceTimeField, path) -> None:
    """One row per grid point and slice: coordinates, time index, value.

    A leading ``#`` comment records ``n R N dt slices t_end`` for re-import.
    """
    x = field.axis
    buf = io.StringIO()
    buf.write(
        f"# n={field.n} R={field.R!r} N={field.N} dt={field.dt!r} "
        f"slices={field.slices} t_end={field.t_end!r}\n"
    )
    w = csv.writer(buf, lineterminator="\n")
    if field.n == 1:
        w.writerow(["x", "time_index", "value"])
        for j in range(field.slices):
            for i in range(field.N):
                w.writerow([repr(float(x[i])), j, repr(float(field.values[j, i]))])
    else:
        w.writerow(["x", "y", "time_index", "value"])
        for j in range(field.slices):
            for i in range(field.N):
                for k in range(field.N):
                    w.writerow(
                        [repr(float(x[i])), repr(float(x[k])), j, repr(float(field.values[j, i, k]))]
                    )
    Path(path).write_text(buf.getvalue())


def read_csv(path) -> SpaceTimeField:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing metadata comment line")
    meta = dict(item.split("=", 1) for item in lines[0][1:].split())
    n, N, slices = int(meta["n"]), int(meta["N"]), int(meta["slices"])
    R, dt, t_end = float(meta["R"]), float(meta["dt"]), float(meta["t_end"])
    rows = list(csv.reader(lines[2:]))
    vals = np.array([float(r[-1]) for r in rows], dtype=float)
    return SpaceTimeField(vals.reshape((slices,) + (N,) * n), R, dt, t_end)
