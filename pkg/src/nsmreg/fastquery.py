"""Exact branch-and-bound search for biased nearest points.

Three objectives share one spatial tree:

* ``ceiling``: minimize ``y_n + L * ||x - x_n||``
* ``floor``:   maximize ``y_n - L * ||x - x_n||``
* ``plain``:   minimize ``||x - x_n||``

The tree is a median split along the widest side of each node's bounding
box, with at most ``LEAF_SIZE`` samples per leaf. A query pops nodes
best-first by an admissible lower bound (label extremum plus ``L`` times the
point-to-box distance) and stops once no remaining node can beat the
incumbent, comparing ``(value, index)`` pairs so ties go to the lowest index
exactly as in :func:`linear_scan`.

Distances are accumulated in plain Python floats in the same order as
:func:`nsmreg.geometry.distances`, so values match the numpy scan bit for bit.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dataset import Dataset
from .exceptions import DimensionError, InsufficientDataError, NsmError
from .geometry import NormSpec, distances

LEAF_SIZE = 8
MODES = ("ceiling", "floor", "plain")


def _dist_fn(p: float):
    if p == 1.0:
        def dist(x, q):
            acc = abs(x[0] - q[0])
            for k in range(1, len(x)):
                acc += abs(x[k] - q[k])
            return acc
    elif p == 2.0:
        def dist(x, q):
            c = x[0] - q[0]
            acc = c * c
            for k in range(1, len(x)):
                c = x[k] - q[k]
                acc += c * c
            return math.sqrt(acc)
    else:
        def dist(x, q):
            acc = abs(x[0] - q[0])
            for k in range(1, len(x)):
                c = abs(x[k] - q[k])
                if c > acc:
                    acc = c
            return acc
    return dist


def _gaps(x, lo, hi):
    out = []
    for xk, a, b in zip(x, lo, hi):
        if xk < a:
            out.append(a - xk)
        elif xk > b:
            out.append(xk - b)
        else:
            out.append(0.0)
    return out


def _box_dist_fn(p: float):
    if p == 1.0:
        def bdist(x, lo, hi):
            g = _gaps(x, lo, hi)
            acc = g[0]
            for k in range(1, len(g)):
                acc += g[k]
            return acc
    elif p == 2.0:
        def bdist(x, lo, hi):
            g = _gaps(x, lo, hi)
            acc = g[0] * g[0]
            for k in range(1, len(g)):
                acc += g[k] * g[k]
            return math.sqrt(acc)
    else:
        def bdist(x, lo, hi):
            return max(_gaps(x, lo, hi))
    return bdist


class SpatialTree:
    """Median-split binary space partition over sample points.

    Node arrays are indexed by node id; node 0 is the root. Label extrema
    per node are stored here since they do not depend on L.
    """

    def __init__(self, X, y, leaf_size: int = LEAF_SIZE):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        if X.shape[0] == 0:
            raise InsufficientDataError("cannot build an index over an empty dataset")
        if y.shape != (X.shape[0],):
            raise DimensionError("labels do not match features")
        self.X = X
        self.y = y
        self.dim = X.shape[1]
        self.leaf_size = leaf_size
        self._pts = [tuple(r) for r in X.tolist()]
        self._ys = y.tolist()
        self.lo: list[tuple] = []
        self.hi: list[tuple] = []
        self.ymin: list[float] = []
        self.ymax: list[float] = []
        self.min_index: list[int] = []
        self.children: list[tuple] = []
        self.members: list[tuple] = []
        self.comparisons = 0
        self._build(np.arange(X.shape[0]))

    def _build(self, idx: np.ndarray) -> int:
        node = len(self.lo)
        pts = self.X[idx]
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        self.lo.append(tuple(lo.tolist()))
        self.hi.append(tuple(hi.tolist()))
        self.ymin.append(float(self.y[idx].min()))
        self.ymax.append(float(self.y[idx].max()))
        self.min_index.append(int(idx.min()))
        self.children.append(())
        self.members.append(())
        if idx.size <= self.leaf_size:
            self.members[node] = tuple(int(i) for i in np.sort(idx))
            return node
        axis = int(np.argmax(hi - lo))
        order = np.lexsort((idx, pts[:, axis]))
        self.comparisons += int(idx.size * max(1, math.ceil(math.log2(idx.size))))
        half = idx.size // 2
        left = self._build(idx[order[:half]])
        right = self._build(idx[order[half:]])
        self.children[node] = (left, right)
        return node

    def __len__(self):
        return len(self.lo)

    def is_leaf(self, node: int) -> bool:
        return not self.children[node]

    def leaves(self) -> list[tuple]:
        """Leaf member tuples in depth-first, left-to-right order."""
        out, stack = [], [0]
        while stack:
            node = stack.pop()
            if self.is_leaf(node):
                out.append(self.members[node])
            else:
                left, right = self.children[node]
                stack.extend((right, left))
        return out


class QueryResult(NamedTuple):
    index: int
    value: float
    visited: int = 0
    evaluated: int = 0
    # smallest bound among nodes that were never expanded (inf if none)
    pruned_bound: float = math.inf


@dataclass(frozen=True)
class BiasedIndex:
    tree: SpatialTree = field(repr=False)
    mode: str = "plain"
    L: float = 1.0
    norm: NormSpec = NormSpec()

    def __post_init__(self):
        if self.mode not in MODES:
            raise NsmError(f"mode must be one of {MODES}, got {self.mode!r}")
        L = float(self.L)
        if self.mode != "plain" and not (np.isfinite(L) and L > 0):
            raise NsmError(f"L must be positive and finite, got {self.L}")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "_dist", _dist_fn(self.norm.p))
        object.__setattr__(self, "_bdist", _box_dist_fn(self.norm.p))

    def with_lipschitz(self, L: float) -> "BiasedIndex":
        """Same tree, new bias scale."""
        return BiasedIndex(self.tree, self.mode, L, self.norm)

    def _node_bound(self, node: int, x) -> float:
        t = self.tree
        bd = self._bdist(x, t.lo[node], t.hi[node])
        if self.mode == "ceiling":
            return t.ymin[node] + self.L * bd
        if self.mode == "floor":
            return -t.ymax[node] + self.L * bd
        return bd

    def query(self, x) -> QueryResult:
        """Exact optimum and its index; also reports search statistics."""
        x = tuple(float(v) for v in np.ravel(np.asarray(x, dtype=np.float64)))
        t = self.tree
        if len(x) != t.dim:
            raise DimensionError(f"expected a {t.dim}-D point, got {len(x)}-D")
        dist, pts, ys, L, mode = self._dist, t._pts, t._ys, self.L, self.mode

        best_v, best_i = math.inf, len(pts)
        visited = evaluated = 0
        pruned = math.inf
        heap = [(self._node_bound(0, x), t.min_index[0], 0)]
        while heap:
            b, mi, node = heap[0]
            if (b, mi) >= (best_v, best_i):
                break
            heapq.heappop(heap)
            visited += 1
            if not t.children[node]:
                for j in t.members[node]:
                    d = dist(x, pts[j])
                    if mode == "ceiling":
                        v = ys[j] + L * d
                    elif mode == "floor":
                        v = -ys[j] + L * d
                    else:
                        v = d
                    evaluated += 1
                    if v < best_v or (v == best_v and j < best_i):
                        best_v, best_i = v, j
                continue
            for child in t.children[node]:
                cb = self._node_bound(child, x)
                if (cb, t.min_index[child]) < (best_v, best_i):
                    heapq.heappush(heap, (cb, t.min_index[child], child))
                elif cb < pruned:
                    pruned = cb
        for b, _, _ in heap:
            pruned = min(pruned, b)
        value = -best_v if mode == "floor" else best_v
        if mode == "floor":
            pruned = -pruned
        return QueryResult(best_i, value, visited, evaluated, pruned)

    def query_many(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        res = [self.query(x) for x in X]
        return (np.array([r.index for r in res], dtype=np.intp),
                np.array([r.value for r in res], dtype=np.float64))


def build(d: Dataset | tuple, mode: str = "plain", L: float = 1.0,
          norm: NormSpec = NormSpec(), leaf_size: int = LEAF_SIZE) -> BiasedIndex:
    """Index a dataset (or an ``(X, y)`` pair) for one objective."""
    X, y = (d.X, d.y) if isinstance(d, Dataset) else d
    return BiasedIndex(SpatialTree(X, y, leaf_size), mode, L, norm)


def linear_scan(X, y, points, mode: str = "plain", L: float = 1.0,
                norm: NormSpec = NormSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Brute-force reference: O(N) per point, lowest index on ties."""
    D = distances(points, X, norm)
    y = np.asarray(y, dtype=np.float64)
    if mode == "ceiling":
        obj = y + L * D
        idx = np.argmin(obj, axis=1)
    elif mode == "floor":
        obj = y - L * D
        idx = np.argmax(obj, axis=1)
    elif mode == "plain":
        obj = D
        idx = np.argmin(obj, axis=1)
    else:
        raise NsmError(f"mode must be one of {MODES}, got {mode!r}")
    return idx, obj[np.arange(obj.shape[0]), idx]
