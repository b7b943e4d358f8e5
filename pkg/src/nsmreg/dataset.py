"""Labeled sample sets, CSV I/O and seeded synthetic data.

Synthetic sampling uses numpy's ``default_rng(seed)`` (the PCG64 bit
generator). Features are drawn in one call,
``rng.uniform(box.lower, box.upper, size=(n, dim))``, so sample ``i`` is row
``i`` of that draw and labels are the ground truth evaluated at the rows.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .exceptions import DatasetError, DimensionError, InfiniteSlopeError, InsufficientDataError
from .geometry import DomainBox, NormSpec, distances


@dataclass(frozen=True)
class Dataset:
    """Ordered samples ``(X[n], y[n])`` inside a domain box.

    Exact duplicates (same features, same label) are dropped at construction,
    keeping the first occurrence. Duplicated features with different labels
    are kept so that :func:`validate` can report them.
    """

    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    box: DomainBox
    source: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DimensionError(f"features {X.shape} and labels {y.shape} do not match")
        if X.shape[0] == 0:
            raise InsufficientDataError("dataset needs at least one sample")
        if X.shape[1] != self.box.dim:
            raise DimensionError(f"features are {X.shape[1]}-D but the box is {self.box.dim}-D")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DatasetError("features and labels must be finite")
        inside = self.box.contains(X)
        if not inside.all():
            bad = int(np.flatnonzero(~inside)[0])
            raise DatasetError(f"sample {bad} at {X[bad].tolist()} lies outside the box")

        keep = _first_occurrences(X, y)
        X = np.ascontiguousarray(X[keep])
        y = np.ascontiguousarray(y[keep])
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_arrays(cls, X, y, box: DomainBox | None = None, source: str = "") -> "Dataset":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if box is None:
            box = bounding_box(X)
        return cls(X, y, box, source)

    def __len__(self):
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.box == other.box and np.array_equal(self.X, other.X)
                and np.array_equal(self.y, other.y))

    __hash__ = None


def _first_occurrences(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    seen = set()
    keep = []
    for i in range(X.shape[0]):
        key = (X[i].tobytes(), y[i].tobytes())
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return np.asarray(keep, dtype=np.intp)


def bounding_box(X: np.ndarray) -> DomainBox:
    """Tight box around the samples; degenerate axes are widened by 0.5 on each side."""
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    flat = lo == hi
    lo = np.where(flat, lo - 0.5, lo)
    hi = np.where(flat, hi + 0.5, hi)
    return DomainBox(lo, hi)


@dataclass(frozen=True)
class AssumptionReport:
    has_distinct_labels: bool
    duplicate_feature_conflicts: list

    @property
    def ok(self) -> bool:
        return self.has_distinct_labels and not self.duplicate_feature_conflicts


def validate(d: Dataset) -> AssumptionReport:
    """Check that labels are not all equal and that features determine labels.

    Conflicts are reported as 0-based index pairs ``(i, j)`` with ``i < j``.
    """
    distinct = bool(np.any(d.y != d.y[0]))
    groups: dict[bytes, list[int]] = {}
    for i in range(len(d)):
        groups.setdefault(d.X[i].tobytes(), []).append(i)
    conflicts = []
    for idx in groups.values():
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                i, j = idx[a], idx[b]
                if d.y[i] != d.y[j]:
                    conflicts.append((i, j))
    conflicts.sort()
    return AssumptionReport(has_distinct_labels=distinct, duplicate_feature_conflicts=conflicts)


def lipschitz_lower_bound(d: Dataset, spec: NormSpec = NormSpec(), chunk: int = 1024) -> float:
    """Largest pairwise slope ``|y_i - y_j| / ||x_i - x_j||`` in the data."""
    n = len(d)
    if n < 2:
        raise InsufficientDataError("need at least two samples for a slope bound")
    best = 0.0
    for start in range(0, n, chunk):
        rows = slice(start, min(start + chunk, n))
        D = distances(d.X[rows], d.X, spec)
        dy = np.abs(d.y[rows, None] - d.y[None, :])
        zero = D == 0.0
        if np.any(zero & (dy > 0)):
            i, j = np.argwhere(zero & (dy > 0))[0]
            raise InfiniteSlopeError(
                f"samples {start + i} and {j} share features but have different labels"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            slope = np.where(zero, 0.0, dy / np.where(zero, 1.0, D))
        best = max(best, float(slope.max()))
    return best


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def load_csv(path, box: DomainBox | None = None) -> Dataset:
    """Read a ``x_1,...,x_d,y`` CSV (a trailing ``value`` column is accepted too)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    dim = len(header) - 1
    expected = [f"x_{i}" for i in range(1, dim + 1)]
    if dim < 1 or header[:-1] != expected or header[-1] not in ("y", "value"):
        raise DatasetError(f"{path}: header must be x_1,...,x_d,y; got {','.join(header)}")
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != dim + 1:
            raise DimensionError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise DatasetError(f"{path}:{lineno}: non-finite value")
        X.append(vals[:-1])
        y.append(vals[-1])
    if not X:
        raise InsufficientDataError(f"{path}: no samples")
    X = np.asarray(X, dtype=np.float64)
    if box is not None and box.dim != dim:
        raise DimensionError(f"{path}: data is {dim}-D but the declared box is {box.dim}-D")
    return Dataset.from_arrays(X, np.asarray(y), box=box, source=str(path))


def write_csv(d: Dataset, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{i}" for i in range(1, d.dim + 1)] + ["y"])
        for xi, yi in zip(d.X, d.y):
            w.writerow([_fmt(v) for v in xi] + [_fmt(yi)])


# --------------------------------------------------------------------------
# Synthetic ground truths
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticFunction:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    dim: int | None = None  # None: any dimension
    # global Lipschitz bound per norm label, as a function of the dimension
    bounds: dict = field(default_factory=dict)
    description: str = ""

    def __call__(self, X):
        return self.func(np.atleast_2d(np.asarray(X, dtype=np.float64)))

    def lipschitz_bound(self, spec: NormSpec, dim: int) -> float:
        return float(self.bounds[spec.label](dim))


def _cos_plus_sin(X):
    return np.cos(X[:, 0]) + np.sin(X[:, 1])


def _cos_plus_sin_grad(X):
    return np.stack([-np.sin(X[:, 0]), np.cos(X[:, 1])], axis=1)


def _sin_sum(X):
    return np.sin(X).sum(axis=1)


def _constant(X):
    return np.ones(X.shape[0])


# Bounds are sup over R^d of the dual norm of the gradient.
SYNTHETIC: dict[str, SyntheticFunction] = {
    "cos_plus_sin": SyntheticFunction(
        "cos_plus_sin", _cos_plus_sin, _cos_plus_sin_grad, dim=2,
        bounds={"1": lambda d: 1.0, "2": lambda d: math.sqrt(2.0), "inf": lambda d: 2.0},
        description="cos(x_1) + sin(x_2)",
    ),
    "sin_sum": SyntheticFunction(
        "sin_sum", _sin_sum, np.cos, dim=None,
        bounds={"1": lambda d: 1.0, "2": lambda d: math.sqrt(d), "inf": lambda d: float(d)},
        description="sum_i sin(x_i)",
    ),
    "constant": SyntheticFunction(
        "constant", _constant, np.zeros_like, dim=None,
        bounds={"1": lambda d: 0.0, "2": lambda d: 0.0, "inf": lambda d: 0.0},
        description="1 everywhere",
    ),
}


def get_synthetic(function_id: str) -> SyntheticFunction:
    try:
        return SYNTHETIC[function_id]
    except KeyError:
        raise DatasetError(
            f"unknown synthetic function {function_id!r}; known: {', '.join(sorted(SYNTHETIC))}"
        ) from None


def sample_synthetic(function_id: str, box: DomainBox, n: int, seed: int) -> Dataset:
    fn = get_synthetic(function_id)
    if n < 1:
        raise InsufficientDataError(f"need at least one sample, got n={n}")
    if fn.dim is not None and fn.dim != box.dim:
        raise DimensionError(f"{function_id} is {fn.dim}-D but the box is {box.dim}-D")
    rng = np.random.default_rng(seed)
    X = rng.uniform(box.lower, box.upper, size=(n, box.dim))
    return Dataset(X, fn(X), box, source=f"synthetic:{function_id}:seed={seed}")


def best_lipschitz_on_grid(function_id: str, grid, spec: NormSpec = NormSpec()) -> float:
    """Grid maximum of the dual norm of the gradient (the best constant on a convex box)."""
    fn = get_synthetic(function_id)
    g = fn.grad(grid.points)
    dual = {1.0: math.inf, 2.0: 2.0, math.inf: 1.0}[spec.p]
    return float(np.linalg.norm(g, ord=dual, axis=1).max())
