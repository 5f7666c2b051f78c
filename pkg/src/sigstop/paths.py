"""Time grids, discrete paths, ensembles and increment inner products.

Every Goursat solve in the package is driven by a matrix of inner products
between successive increments of two paths.  This module owns the path data
types and builds those matrices.

Ensembles are stored densely as an array of shape ``(n, P + 1, d)`` (path,
time, coordinate) and share one :class:`TimeGrid`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Iterator, Optional, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing, finite time points ``t_0 < ... < t_P`` with ``t_0 >= 0``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1)
        if pts.size < 2:
            raise ValueError("a time grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("time grid points must be finite")
        if pts[0] < 0:
            raise ValueError("time grid must start at t0 >= 0")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("time grid must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return self is other or np.array_equal(self.points, other.points)

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    @property
    def steps(self) -> int:
        return self.points.size - 1

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.points)

    def index_of(self, t: float) -> int:
        """Index of grid point ``t``; raises ``ValueError`` when ``t`` is off the grid."""
        idx = int(np.searchsorted(self.points, t))
        if idx < self.points.size and np.isclose(self.points[idx], t, rtol=0, atol=1e-12):
            return idx
        if idx > 0 and np.isclose(self.points[idx - 1], t, rtol=0, atol=1e-12):
            return idx - 1
        raise ValueError(f"t={t!r} is not a grid point")

    def prefix(self, index: int) -> np.ndarray:
        return self.points[: index + 1]


def build_grid(t0: float, T: float, steps: int) -> TimeGrid:
    """Uniform grid with ``steps + 1`` points from ``t0`` to ``T`` inclusive."""
    if not (np.isfinite(t0) and np.isfinite(T)):
        raise ValueError("grid bounds must be finite")
    if T <= t0:
        raise ValueError(f"need T > t0, got t0={t0}, T={T}")
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    return TimeGrid(np.linspace(t0, T, int(steps) + 1))


@dataclass(frozen=True, eq=False)
class Path:
    """One trajectory sampled on a grid; ``values`` has shape ``(P + 1, d)``.

    A path with a single time point is allowed (it is what :func:`restrict`
    returns at ``t_0``), so ``grid`` is then stored as a raw 1-point array.
    """

    grid: object
    values: np.ndarray
    augmented: bool = False

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise ValueError("path values must be a (P+1) x d matrix")
        times = self.times
        if vals.shape[0] != times.size:
            raise ValueError(
                f"values have {vals.shape[0]} rows but the grid has {times.size} points"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("path values must be finite")
        if self.augmented and not np.array_equal(vals[:, 0], times):
            raise ValueError("augmented path: column 0 must equal the grid times")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def times(self) -> np.ndarray:
        if isinstance(self.grid, TimeGrid):
            return self.grid.points
        return np.asarray(self.grid, dtype=np.float64).reshape(-1)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def __len__(self) -> int:
        return self.values.shape[0]


def augment_time(p: Path) -> Path:
    """Prepend the grid times as coordinate 0."""
    if p.augmented:
        raise ValueError("path is already time-augmented")
    vals = np.column_stack([p.times, p.values])
    return Path(p.grid, vals, augmented=True)


def strip_time(p: Path) -> Path:
    if not p.augmented:
        raise ValueError("path is not time-augmented")
    return Path(p.grid, p.values[:, 1:], augmented=False)


def restrict(p: Path, t: float) -> Path:
    """Prefix of ``p`` on ``{s in grid : s <= t}``; ``t`` must be a grid point."""
    times = p.times
    grid = p.grid if isinstance(p.grid, TimeGrid) else TimeGrid(times) if times.size > 1 else None
    if grid is None:
        if not np.isclose(times[0], t, rtol=0, atol=1e-12):
            raise ValueError(f"t={t!r} is not a grid point")
        return p
    k = grid.index_of(t)
    sub = times[: k + 1]
    return Path(TimeGrid(sub) if sub.size > 1 else sub.copy(), p.values[: k + 1], p.augmented)


def increment_matrix(x: Path, y: Path, method: str = "direct") -> np.ndarray:
    """Matrix of ``<x_{t_{p+1}} - x_{t_p}, y_{s_{q+1}} - y_{s_q}>``.

    ``method="double_difference"`` first forms all pairwise value inner
    products and then takes the mixed second difference; it agrees with the
    direct increment product up to rounding.
    """
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if method == "direct":
        out = x.increments @ y.increments.T
    elif method == "double_difference":
        out = double_difference(x.values @ y.values.T)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(out)):
        raise ValueError("increment matrix has non-finite entries")
    return out


def double_difference(a: np.ndarray) -> np.ndarray:
    """Mixed second difference over the last two axes."""
    return a[..., 1:, 1:] + a[..., :-1, :-1] - a[..., 1:, :-1] - a[..., :-1, 1:]


@dataclass(frozen=True, eq=False)
class Ensemble:
    """i.i.d. sample paths sharing one grid: ``values`` has shape ``(n, P + 1, d)``."""

    grid: TimeGrid
    values: np.ndarray
    augmented: bool = False
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.grid, TimeGrid):
            object.__setattr__(self, "grid", TimeGrid(self.grid))
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == 2:
            vals = vals[:, :, None]
        if vals.ndim != 3 or vals.shape[0] == 0:
            raise ValueError("ensemble values must be a nonempty (n, P+1, d) array")
        if vals.shape[1] != len(self.grid):
            raise ValueError(
                f"paths have {vals.shape[1]} time points but the grid has {len(self.grid)}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("ensemble values must be finite")
        if self.augmented and not np.all(vals[:, :, 0] == self.grid.points[None, :]):
            raise ValueError("augmented ensemble: column 0 must equal the grid times")
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_paths(cls, paths: Sequence[Path], seed: Optional[int] = None) -> "Ensemble":
        if not paths:
            raise ValueError("an ensemble needs at least one path")
        first = paths[0]
        for p in paths[1:]:
            if not np.array_equal(p.times, first.times):
                raise ValueError("all paths of an ensemble must share one grid")
            if p.dim != first.dim or p.augmented != first.augmented:
                raise ValueError("all paths must share dimension and augmentation flag")
        grid = first.grid if isinstance(first.grid, TimeGrid) else TimeGrid(first.times)
        return cls(grid, np.stack([p.values for p in paths]), first.augmented, seed)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __iter__(self) -> Iterator[Path]:
        for v in self.values:
            yield Path(self.grid, v, self.augmented)

    def __getitem__(self, i: int) -> Path:
        return Path(self.grid, self.values[i], self.augmented)

    @property
    def paths(self) -> list[Path]:
        return list(self)

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=1)

    def subset(self, index) -> "Ensemble":
        return Ensemble(self.grid, self.values[index], self.augmented, self.seed, dict(self.meta))

    def restrict(self, t: float) -> "Ensemble":
        k = self.grid.index_of(t)
        if k == 0:
            raise ValueError("an ensemble restricted to t0 has a single-point grid")
        return Ensemble(TimeGrid(self.grid.points[: k + 1]), self.values[:, : k + 1],
                        self.augmented, self.seed, dict(self.meta))

    def compatible_with(self, other: "Ensemble") -> bool:
        return (self.dim == other.dim and self.augmented == other.augmented
                and len(self.grid) == len(other.grid))


def augment_ensemble(ens: Ensemble) -> Ensemble:
    if ens.augmented:
        raise ValueError("ensemble is already time-augmented")
    t = np.broadcast_to(ens.grid.points[None, :, None], (len(ens), len(ens.grid), 1))
    return Ensemble(ens.grid, np.concatenate([t, ens.values], axis=2), True, ens.seed,
                    dict(ens.meta))


def scale_values(ens: Ensemble, c: float) -> Ensemble:
    """Multiply the non-time coordinates by ``c > 0``."""
    if not (np.isfinite(c) and c > 0):
        raise ValueError(f"scale must be a positive finite number, got {c!r}")
    if c == 1.0:
        return ens
    vals = np.array(ens.values)
    start = 1 if ens.augmented else 0
    vals[:, :, start:] *= c
    return Ensemble(ens.grid, vals, ens.augmented, ens.seed, dict(ens.meta))


def prepare(ens: Ensemble, scale: float = 1.0) -> Ensemble:
    """Scale the values by ``scale`` and time-augment (once) ahead of kernel computations."""
    ens = scale_values(ens, scale)
    return ens if ens.augmented else augment_ensemble(ens)


def write_csv(ens: Ensemble, path) -> None:
    """Write ``path_id,t,x1,...,xd`` rows; the time column of augmented ensembles is dropped."""
    vals = ens.values[:, :, 1:] if ens.augmented else ens.values
    d = vals.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path_id", "t"] + [f"x{k + 1}" for k in range(d)])
        for i in range(vals.shape[0]):
            for p, t in enumerate(ens.grid.points):
                w.writerow([i, repr(float(t))] + [repr(float(v)) for v in vals[i, p]])


def read_csv(path, seed: Optional[int] = None) -> Ensemble:
    """Read the CSV written by :func:`write_csv`; ragged grids are rejected."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if header[:2] != ["path_id", "t"] or len(header) < 3:
        raise ValueError(f"{path}: expected header path_id,t,x1,...,xd")
    d = len(header) - 2
    by_path: dict[str, list] = {}
    order: list[str] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != d + 2:
            raise ValueError(f"{path}:{lineno}: expected {d + 2} fields")
        pid = row[0]
        if pid not in by_path:
            by_path[pid] = []
            order.append(pid)
        by_path[pid].append([float(v) for v in row[1:]])
    arrays = [np.array(by_path[pid]) for pid in order]
    times = arrays[0][:, 0]
    for pid, arr in zip(order, arrays):
        if arr.shape[0] != times.size or not np.array_equal(arr[:, 0], times):
            raise ValueError(f"{path}: path {pid} does not share the grid of the first path")
    return Ensemble(TimeGrid(times), np.stack([a[:, 1:] for a in arrays]), False, seed,
                    {"source": str(FsPath(path))})
