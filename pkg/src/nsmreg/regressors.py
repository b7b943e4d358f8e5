"""Nearest-neighbor, k-NN and NSM regressors and pointwise region labels.

Indices are 0-based positions in the dataset. Every argmin/argmax resolves
ties toward the lowest index (``np.argmin``/``np.argmax`` already do).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dataset import Dataset, lipschitz_lower_bound
from .exceptions import DimensionError, LipschitzError, NsmError
from .geometry import NormSpec, distances


class Evaluation(NamedTuple):
    """Everything both regressors produce at a batch of points."""

    ceiling: np.ndarray
    floor: np.ndarray
    nsm: np.ndarray
    nn: np.ndarray
    ceiling_index: np.ndarray
    floor_index: np.ndarray
    voronoi_index: np.ndarray

    @property
    def is_b(self) -> np.ndarray:
        return self.ceiling_index == self.floor_index

    @property
    def error(self) -> np.ndarray:
        return self.nn - self.nsm


def evaluate_distances(D: np.ndarray, y: np.ndarray, L: float, voronoi_index=None) -> Evaluation:
    """Evaluate envelopes, NSM, NN and cell indices from a distance matrix.

    `D` has shape (points, samples). `voronoi_index` may be passed in when the
    caller already has it (it does not depend on L).
    """
    up = y + L * D
    lo = y - L * D
    ci = np.argmin(up, axis=1)
    fi = np.argmax(lo, axis=1)
    rows = np.arange(D.shape[0])
    c = up[rows, ci]
    f = lo[rows, fi]
    if voronoi_index is None:
        voronoi_index = np.argmin(D, axis=1)
    mid = 0.5 * (c + f)
    # For valid L the exact envelopes never cross, but at L equal to the data
    # lower bound they touch and rounding can put f a few ulps above c.
    crossed = f > c
    if crossed.any():
        c = np.where(crossed, mid, c)
        f = np.where(crossed, mid, f)
    # exact midpoint lies in [y_ci, y_fi], hence inside the label range
    nsm = np.clip(mid, y.min(), y.max())
    # on B cells both envelopes are anchored at the same sample and the
    # midpoint is y_n exactly; (c + f) / 2 would only reach it up to rounding
    nsm = np.where(ci == fi, y[ci], nsm)
    # at a sample both envelopes equal its label
    on_sample = D[rows, voronoi_index] == 0.0
    if on_sample.any():
        yv = y[voronoi_index]
        c = np.where(on_sample, yv, c)
        f = np.where(on_sample, yv, f)
        nsm = np.where(on_sample, yv, nsm)
    return Evaluation(c, f, nsm, y[voronoi_index], ci, fi, voronoi_index)


def _points(data: Dataset, x, check_box: bool) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    if x.ndim == 0:
        x = x[None]
    pts = x[None, :] if single else x
    if pts.ndim != 2 or pts.shape[1] != data.dim:
        raise DimensionError(f"expected {data.dim}-D points, got shape {x.shape}")
    if check_box and not data.box.contains(pts).all():
        raise NsmError("query point outside the domain box")
    return pts, single


def _out(a: np.ndarray, single: bool):
    return a[0].item() if single else a


@dataclass(frozen=True)
class RegionLabel:
    """Cells containing a point: Voronoi, ceiling AVD and floor AVD.

    ``kind`` is ``"B"`` when the ceiling and floor indices coincide,
    otherwise ``"A"`` with ``n = ceiling_index`` and ``m = floor_index``.
    """

    voronoi_index: int
    ceiling_index: int
    floor_index: int

    @property
    def kind(self) -> str:
        return "B" if self.ceiling_index == self.floor_index else "A"

    @property
    def n(self) -> int:
        return self.ceiling_index

    @property
    def m(self) -> int:
        return self.floor_index

    def __str__(self):
        if self.kind == "B":
            return f"B({self.n})"
        return f"A({self.n},{self.m})"


@dataclass(frozen=True)
class NnModel:
    data: Dataset
    norm: NormSpec = NormSpec()
    check_box: bool = field(default=True, repr=False)

    def distances(self, x) -> np.ndarray:
        pts, _ = _points(self.data, x, self.check_box)
        return distances(pts, self.data.X, self.norm)

    def query(self, x):
        """Index of the nearest sample (lowest index on ties)."""
        pts, single = _points(self.data, x, self.check_box)
        idx = np.argmin(distances(pts, self.data.X, self.norm), axis=1)
        return int(idx[0]) if single else idx

    def predict(self, x):
        pts, single = _points(self.data, x, self.check_box)
        idx = np.argmin(distances(pts, self.data.X, self.norm), axis=1)
        return _out(self.data.y[idx], single)

    def neighbors(self, x, k: int) -> np.ndarray:
        """Indices of the k nearest samples, closest first, ties to lower index."""
        if not 1 <= k <= len(self.data):
            raise NsmError(f"k must be in [1, {len(self.data)}], got {k}")
        pts, single = _points(self.data, x, self.check_box)
        order = np.argsort(distances(pts, self.data.X, self.norm), axis=1, kind="stable")[:, :k]
        return order[0] if single else order

    def knn(self, x, k: int):
        """Unweighted mean label of the k nearest samples."""
        idx = self.neighbors(x, k)
        return _out(np.atleast_2d(self.data.y[idx]).mean(axis=1), np.ndim(idx) == 1)


@dataclass(frozen=True)
class NsmModel:
    """Nonlinear set membership regressor for a dataset, Lipschitz estimate and norm.

    Construction fails if `L` is below the largest slope in the data, since
    the floor would then rise above the ceiling somewhere.
    """

    data: Dataset
    L: float
    norm: NormSpec = NormSpec()
    check_box: bool = field(default=True, repr=False)
    lower_bound: float | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        L = float(self.L)
        if not np.isfinite(L) or L <= 0:
            raise LipschitzError(f"Lipschitz estimate must be positive and finite, got {self.L}")
        object.__setattr__(self, "L", L)
        if self.lower_bound is None:
            lb = lipschitz_lower_bound(self.data, self.norm) if len(self.data) > 1 else 0.0
            object.__setattr__(self, "lower_bound", lb)
        if L < self.lower_bound:
            raise LipschitzError(
                f"L={L:.17g} is below the data-implied lower bound {self.lower_bound:.17g} "
                f"under {self.norm}; use L >= {self.lower_bound:.17g}"
            )

    def with_lipschitz(self, L: float) -> "NsmModel":
        return NsmModel(self.data, L, self.norm, self.check_box, self.lower_bound)

    def evaluate(self, x) -> Evaluation:
        pts, _ = _points(self.data, x, self.check_box)
        return evaluate_distances(distances(pts, self.data.X, self.norm), self.data.y, self.L)

    def ceiling(self, x):
        pts, single = _points(self.data, x, self.check_box)
        return _out(self.evaluate(pts).ceiling, single)

    def floor(self, x):
        pts, single = _points(self.data, x, self.check_box)
        return _out(self.evaluate(pts).floor, single)

    def predict(self, x):
        """Midpoint of the ceiling and floor envelopes."""
        pts, single = _points(self.data, x, self.check_box)
        return _out(self.evaluate(pts).nsm, single)

    def classify(self, x):
        """RegionLabel for a single point, or a list of them for a batch."""
        pts, single = _points(self.data, x, self.check_box)
        ev = self.evaluate(pts)
        labels = [RegionLabel(int(v), int(c), int(f))
                  for v, c, f in zip(ev.voronoi_index, ev.ceiling_index, ev.floor_index)]
        return labels[0] if single else labels
