"""Discrepancy between the NSM and nearest-neighbor regressors.

The error function is ``e_L(x) = f_NN(x) - f_NSM,L(x)``. Norms are midpoint
rule estimates on a fixed grid; the sup norm is the grid maximum and hence
a lower bound of the true supremum. The transition mass ``sigma`` is the
grid volume of points whose ceiling and floor cells differ (A cells);
``b_mass`` is the rest.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from .dataset import Dataset, lipschitz_lower_bound
from .exceptions import LipschitzError, ModelMismatchError, NsmError
from .geometry import Grid, GridSpec, NormSpec, distances, make_grid
from .regressors import Evaluation, NnModel, NsmModel, evaluate_distances

# Rows of the distance matrix held in memory at once, scaled by 1/N.
CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class ErrorBoundConstants:
    f_nsm_bound: float
    f_nn_bound: float

    @property
    def f_e_bound(self) -> float:
        return self.f_nsm_bound + self.f_nn_bound

    @classmethod
    def for_dataset(cls, d: Dataset) -> "ErrorBoundConstants":
        m = float(np.max(np.abs(d.y)))
        return cls(m, m)


def _check_pair(nsm: NsmModel, nn: NnModel) -> None:
    if nsm.norm != nn.norm:
        raise ModelMismatchError(f"models use different norms: {nsm.norm} vs {nn.norm}")
    if nsm.data is not nn.data and nsm.data != nn.data:
        raise ModelMismatchError("models were built on different datasets")


def piecewise_error(ev: Evaluation, D: np.ndarray, y: np.ndarray, L: float) -> np.ndarray:
    """Closed form of the error from the cell indices alone.

    Zero on B cells; on A(n, m) with nearest sample p it is
    ``y_p - (y_n + y_m)/2 - L/2 * (||x - x_n|| - ||x - x_m||)``.
    """
    rows = np.arange(D.shape[0])
    n, m, p = ev.ceiling_index, ev.floor_index, ev.voronoi_index
    a_val = y[p] - 0.5 * (y[n] + y[m]) - 0.5 * L * (D[rows, n] - D[rows, m])
    return np.where(n == m, 0.0, a_val)


def error_at(nsm: NsmModel, nn: NnModel, x, check: bool = False, atol: float = 1e-12):
    """``f_NN(x) - f_NSM(x)``; with ``check`` also verifies the piecewise closed form."""
    _check_pair(nsm, nn)
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    pts = np.atleast_2d(x) if x.ndim else x.reshape(1, 1)
    if not nsm.data.box.contains(pts).all():
        raise NsmError("query point outside the domain box")
    D = distances(pts, nsm.data.X, nsm.norm)
    ev = evaluate_distances(D, nsm.data.y, nsm.L)
    e = ev.error
    if check:
        closed = piecewise_error(ev, D, nsm.data.y, nsm.L)
        bad = np.abs(e - closed) > atol
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise AssertionError(
                f"piecewise identity broken at {pts[i].tolist()}: {e[i]!r} vs {closed[i]!r}"
            )
    return e[0].item() if single else e


def _resolve_grid(d: Dataset, grid: Grid | GridSpec | int) -> Grid:
    if isinstance(grid, Grid):
        if grid.box != d.box:
            raise NsmError(f"grid box {grid.box} does not match the dataset box {d.box}")
        return grid
    return make_grid(d.box, grid)


def _chunks(d: Dataset, norm: NormSpec, grid: Grid) -> Iterator[tuple[slice, np.ndarray, np.ndarray]]:
    step = max(1, CHUNK_ELEMENTS // len(d))
    for start in range(0, len(grid), step):
        sl = slice(start, min(start + step, len(grid)))
        D = distances(grid.points[sl], d.X, norm)
        yield sl, D, np.argmin(D, axis=1)


def _single_pass(nsm: NsmModel, nn: NnModel, grid) -> tuple[Grid, list[Evaluation]]:
    _check_pair(nsm, nn)
    g = _resolve_grid(nsm.data, grid)
    evs = [evaluate_distances(D, nsm.data.y, nsm.L, vor) for _, D, vor in _chunks(nsm.data, nsm.norm, g)]
    return g, evs


def l2_error(nsm: NsmModel, nn: NnModel, grid) -> float:
    """Midpoint-rule estimate of ``||f_NN - f_NSM||_2`` over the model box."""
    g, evs = _single_pass(nsm, nn, grid)
    total = 0.0
    for ev in evs:
        e = ev.error
        total += float(np.sum(e * e))
    return math.sqrt(total * g.cell_volume)


def sup_error(nsm: NsmModel, nn: NnModel, grid) -> float:
    """Grid maximum of ``|f_NN - f_NSM|`` (a lower bound of the true sup)."""
    _, evs = _single_pass(nsm, nn, grid)
    return max(float(np.max(np.abs(ev.error))) for ev in evs)


def transition_mass(nsm: NsmModel, grid) -> tuple[float, float]:
    """``(sigma, b_mass)``: grid volume classified as A cells and as B cells."""
    g = _resolve_grid(nsm.data, grid)
    n_a = 0
    for _, D, vor in _chunks(nsm.data, nsm.norm, g):
        ev = evaluate_distances(D, nsm.data.y, nsm.L, vor)
        n_a += int(np.count_nonzero(~ev.is_b))
    return n_a * g.cell_volume, (len(g) - n_a) * g.cell_volume


# --------------------------------------------------------------------------
# Sweeps over Lipschitz estimates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LipschitzSchedule:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise LipschitzError("schedule is empty")
        if not all(math.isfinite(v) and v > 0 for v in vals):
            raise LipschitzError(f"schedule values must be positive and finite: {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise LipschitzError(f"schedule must be strictly increasing: {vals}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def linspace(cls, start: float, stop: float, count: int) -> "LipschitzSchedule":
        return cls(tuple(np.linspace(start, stop, count).tolist()))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def check_against(self, d: Dataset, norm: NormSpec) -> float:
        lb = lipschitz_lower_bound(d, norm) if len(d) > 1 else 0.0
        if self.values[0] < lb:
            raise LipschitzError(
                f"schedule starts at {self.values[0]:.17g}, below the data lower bound {lb:.17g}"
            )
        return lb


@dataclass(frozen=True)
class SweepRecord:
    L: float
    l2_error: float
    sup_error: float
    sigma: float
    b_mass: float


@dataclass
class SweepReport:
    records: list
    grid: GridSpec
    norm: NormSpec
    bounds: ErrorBoundConstants
    monotone_l2: bool
    sup_constant: bool
    sigma_monotone: bool
    # grid points that are B at one L and A at the next (should be 0)
    b_persistence_violations: int = 0
    box_volume: float = 0.0
    sup_rtol: float = field(default=0.01, repr=False)

    @property
    def L(self) -> np.ndarray:
        return np.array([r.L for r in self.records])

    @property
    def l2(self) -> np.ndarray:
        return np.array([r.l2_error for r in self.records])

    @property
    def sup(self) -> np.ndarray:
        return np.array([r.sup_error for r in self.records])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([r.sigma for r in self.records])

    def normalized_l2(self) -> np.ndarray:
        l2 = self.l2
        with np.errstate(divide="ignore", invalid="ignore"):
            return l2 / l2[0]

    def to_dict(self) -> dict:
        return {
            "norm": self.norm.label,
            "grid_points_per_axis": self.grid.points_per_axis,
            "box_volume": self.box_volume,
            "bounds": {
                "f_nsm_bound": self.bounds.f_nsm_bound,
                "f_nn_bound": self.bounds.f_nn_bound,
                "f_e_bound": self.bounds.f_e_bound,
            },
            "monotone_l2": self.monotone_l2,
            "sup_constant": self.sup_constant,
            "sup_rtol": self.sup_rtol,
            "sigma_monotone": self.sigma_monotone,
            "b_persistence_violations": self.b_persistence_violations,
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self, normalized: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["L", "l2_error", "sup_error", "sigma", "b_mass"]
        w.writerow(head + (["l2_normalized"] if normalized else []))
        norm_col = self.normalized_l2()
        for i, r in enumerate(self.records):
            row = [r.L, r.l2_error, r.sup_error, r.sigma, r.b_mass]
            if normalized:
                row.append(norm_col[i])
            w.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()


def sweep(d: Dataset, norm: NormSpec, schedule: LipschitzSchedule | list, grid,
          sup_rtol: float = 0.01, mono_atol: float = 1e-9) -> SweepReport:
    """Error norms and transition mass for every L in the schedule, on one fixed grid."""
    if not isinstance(schedule, LipschitzSchedule):
        schedule = LipschitzSchedule(tuple(schedule))
    schedule.check_against(d, norm)
    g = _resolve_grid(d, grid)
    Ls = schedule.values
    sq = [0.0] * len(Ls)
    sup = [0.0] * len(Ls)
    n_a = [0] * len(Ls)
    persistence = 0
    for _, D, vor in _chunks(d, norm, g):
        prev_b = None
        for k, L in enumerate(Ls):
            ev = evaluate_distances(D, d.y, L, vor)
            e = ev.error
            sq[k] += float(np.sum(e * e))
            sup[k] = max(sup[k], float(np.max(np.abs(e))))
            is_b = ev.is_b
            n_a[k] += int(np.count_nonzero(~is_b))
            if prev_b is not None:
                persistence += int(np.count_nonzero(prev_b & ~is_b))
            prev_b = is_b
    vol = g.cell_volume
    records = [
        SweepRecord(L, math.sqrt(s * vol), m, a * vol, (len(g) - a) * vol)
        for L, s, m, a in zip(Ls, sq, sup, n_a)
    ]
    l2 = [r.l2_error for r in records]
    monotone = all(b <= a + mono_atol for a, b in zip(l2, l2[1:]))
    smax, smin = max(sup), min(sup)
    sup_constant = smax == smin or (smax - smin) <= sup_rtol * smax
    sigma_mono = all(b <= a for a, b in zip(n_a, n_a[1:]))
    return SweepReport(
        records=records, grid=g.spec, norm=norm,
        bounds=ErrorBoundConstants.for_dataset(d),
        monotone_l2=monotone, sup_constant=sup_constant, sigma_monotone=sigma_mono,
        b_persistence_violations=persistence, box_volume=d.box.volume, sup_rtol=sup_rtol,
    )


# --------------------------------------------------------------------------
# Local monotonicity between consecutive Lipschitz estimates
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    point: int
    rule: str
    detail: str


@dataclass
class LocalCheck:
    violations: list
    same_cell_checked: int = 0     # A(n,m) at both L, strictly inside C^n or C^m
    a_to_b_checked: int = 0        # A(n,m) at L, B(n) or B(m) at the next L
    index_changes_checked: int = 0  # ceiling or floor index changed

    @property
    def ok(self) -> bool:
        return not self.violations


def _strict_argmin_margin(V: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Gap between the chosen entry and the best other entry in each row."""
    rows = np.arange(V.shape[0])
    if V.shape[1] == 1:
        return np.full(V.shape[0], np.inf)
    other = V.copy()
    other[rows, idx] = np.inf
    return other.min(axis=1) - V[rows, idx]


def check_local_monotonicity(nsm_l: NsmModel, nsm_next: NsmModel, nn: NnModel, points,
                             tol: float = 1e-12, max_report: int | None = None) -> LocalCheck:
    """Test the local error-decrease and index-ordering rules between two estimates.

    For each point:

    * A(n, m) at both estimates, strictly inside the Voronoi cell of n or m:
      ``|e|`` must strictly decrease.
    * A(n, m) strictly inside at the first estimate, B(n) or B(m) at the
      next: ``|e|`` must strictly decrease.
    * Ceiling index n -> o: ``y_o >= y_n``; floor index m -> o: ``y_o <= y_m``.

    "Strictly inside" means the defining inequalities hold with margin `tol`;
    label comparisons also allow `tol` of slack.
    """
    _check_pair(nsm_l, nn)
    _check_pair(nsm_next, nn)
    if nsm_next.L <= nsm_l.L:
        raise ModelMismatchError(f"second model must have larger L ({nsm_next.L} <= {nsm_l.L})")
    d, y = nsm_l.data, nsm_l.data.y
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    D = distances(pts, d.X, nsm_l.norm)
    vor = np.argmin(D, axis=1)
    e0 = evaluate_distances(D, y, nsm_l.L, vor)
    e1 = evaluate_distances(D, y, nsm_next.L, vor)
    a0, a1 = np.abs(e0.error), np.abs(e1.error)

    vor_margin = _strict_argmin_margin(D, vor)
    ceil_margin = _strict_argmin_margin(y + nsm_l.L * D, e0.ceiling_index)
    floor_margin = _strict_argmin_margin(-(y - nsm_l.L * D), e0.floor_index)
    inside_a = (~e0.is_b) & (ceil_margin > tol) & (floor_margin > tol)

    n0, m0, n1, m1 = e0.ceiling_index, e0.floor_index, e1.ceiling_index, e1.floor_index
    same = inside_a & (n1 == n0) & (m1 == m0) & ((vor == n0) | (vor == m0)) & (vor_margin > tol)
    to_b = inside_a & e1.is_b & ((n1 == n0) | (n1 == m0))
    ceil_change = (n1 != n0)
    floor_change = (m1 != m0)

    violations = []

    def add(mask, rule, fmt):
        for i in np.flatnonzero(mask):
            if max_report is not None and len(violations) >= max_report:
                return
            violations.append(Violation(int(i), rule, fmt(int(i))))

    add(same & ~(a1 < a0), "same_cell_decrease",
        lambda i: f"A({n0[i]},{m0[i]}) p={vor[i]}: |e| {a0[i]!r} -> {a1[i]!r}")
    add(to_b & ~(a1 < a0), "a_to_b_decrease",
        lambda i: f"A({n0[i]},{m0[i]}) -> B({n1[i]}): |e| {a0[i]!r} -> {a1[i]!r}")
    add(ceil_change & (y[n1] < y[n0] - tol), "ceiling_order",
        lambda i: f"ceiling {n0[i]} -> {n1[i]}: y {y[n0[i]]!r} -> {y[n1[i]]!r}")
    add(floor_change & (y[m1] > y[m0] + tol), "floor_order",
        lambda i: f"floor {m0[i]} -> {m1[i]}: y {y[m0[i]]!r} -> {y[m1[i]]!r}")

    return LocalCheck(
        violations=violations,
        same_cell_checked=int(same.sum()),
        a_to_b_checked=int(to_b.sum()),
        index_changes_checked=int((ceil_change | floor_change).sum()),
    )
