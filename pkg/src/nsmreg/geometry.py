"""Norms, the domain box and midpoint grids.

Every distance in the package goes through :func:`distances` or
:func:`box_distance`. Both accumulate coordinates one at a time with
elementwise operations only, so the value computed for a given pair of
points is bit-identical regardless of how many other points are in the
batch. The exact search index relies on that.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, NsmError

_NORM_ALIASES = {
    "1": 1.0, "l1": 1.0,
    "2": 2.0, "l2": 2.0,
    "inf": math.inf, "infinity": math.inf, "linf": math.inf, "max": math.inf,
}


@dataclass(frozen=True)
class NormSpec:
    """An l_p norm with p in {1, 2, inf}."""

    p: float = 2.0

    def __post_init__(self):
        p = self.p
        if isinstance(p, str):
            key = p.strip().lower()
            if key not in _NORM_ALIASES:
                raise NsmError(f"unsupported norm {p!r}; use 1, 2 or inf")
            p = _NORM_ALIASES[key]
        p = float(p)
        if p not in (1.0, 2.0, math.inf):
            raise NsmError(f"unsupported norm order {p}; use 1, 2 or inf")
        object.__setattr__(self, "p", p)

    @property
    def label(self) -> str:
        return "inf" if math.isinf(self.p) else str(int(self.p))

    def __str__(self):
        return f"l{self.label}"


def _reduce_abs(diff: np.ndarray, p: float) -> np.ndarray:
    """Norm of `diff` along the last axis, accumulated coordinate by coordinate."""
    a = np.abs(diff[..., 0])
    if p == 1.0:
        acc = a.copy()
        for k in range(1, diff.shape[-1]):
            acc += np.abs(diff[..., k])
        return acc
    if p == 2.0:
        acc = a * a
        for k in range(1, diff.shape[-1]):
            c = diff[..., k]
            acc += c * c
        return np.sqrt(acc)
    acc = a.copy()
    for k in range(1, diff.shape[-1]):
        np.maximum(acc, np.abs(diff[..., k]), out=acc)
    return acc


def norm(v, spec: NormSpec = NormSpec()) -> float:
    """l_p norm of a single vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] == 0:
        raise DimensionError(f"norm needs a non-empty 1-D vector, got shape {v.shape}")
    return float(_reduce_abs(v[None, :], spec.p)[0])


def distances(points, centers, spec: NormSpec = NormSpec()) -> np.ndarray:
    """Matrix of distances, shape (len(points), len(centers))."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if points.shape[1] != centers.shape[1]:
        raise DimensionError(
            f"dimension mismatch: points have {points.shape[1]}, centers {centers.shape[1]}"
        )
    return _reduce_abs(points[:, None, :] - centers[None, :, :], spec.p)


def box_distance(points, lower, upper, spec: NormSpec = NormSpec()) -> np.ndarray:
    """Distance from each point to the axis-aligned box [lower, upper].

    Never exceeds the distance to any point inside the box, also in
    floating point: the per-axis gaps are monotone roundings of the true gaps.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    gap = np.maximum(np.maximum(lower - points, 0.0), points - upper)
    return _reduce_abs(gap, spec.p)


@dataclass(frozen=True)
class DomainBox:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lower, dtype=np.float64)))
        hi = tuple(float(v) for v in np.atleast_1d(np.asarray(self.upper, dtype=np.float64)))
        if len(lo) == 0 or len(lo) != len(hi):
            raise DimensionError("box bounds must be non-empty and of equal length")
        if not all(math.isfinite(a) and math.isfinite(b) for a, b in zip(lo, hi)):
            raise NsmError("box bounds must be finite")
        if not all(a < b for a, b in zip(lo, hi)):
            raise NsmError(f"box must have non-empty interior: lower={lo}, upper={hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "DomainBox":
        return cls((lo,) * dim, (hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((points >= self.lower) & (points <= self.upper), axis=1)


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell decomposition with one point at each cell midpoint."""

    points_per_axis: int

    def __post_init__(self):
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < 1:
            raise NsmError(f"points_per_axis must be a positive integer, got {self.points_per_axis}")


@dataclass(frozen=True)
class Grid:
    box: DomainBox
    spec: GridSpec
    points: np.ndarray = field(repr=False)
    cell_volume: float

    def __len__(self):
        return self.points.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        return np.full(len(self), self.cell_volume)


def make_grid(box: DomainBox, spec: GridSpec | int) -> Grid:
    """Cell midpoints of a uniform decomposition of `box`, row-major order."""
    if not isinstance(spec, GridSpec):
        spec = GridSpec(spec)
    k = spec.points_per_axis
    axes = [lo + (np.arange(k) + 0.5) * ((hi - lo) / k) for lo, hi in zip(box.lower, box.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    points.setflags(write=False)
    cell_volume = float(np.prod(box.widths / k))
    return Grid(box=box, spec=spec, points=points, cell_volume=cell_volume)
