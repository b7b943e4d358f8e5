"""Executable invariant suite run by ``nsmreg check``.

Each check returns a record ``{"passed", "checked", "violations", "first"}``
where ``first`` lists up to a few offending grid indices with details.
"""
from __future__ import annotations

import math

import numpy as np

from .analysis import (
    ErrorBoundConstants, check_local_monotonicity, piecewise_error, _resolve_grid,
)
from .dataset import Dataset, SyntheticFunction, validate
from .fastquery import MODES, SpatialTree, BiasedIndex, linear_scan
from .geometry import NormSpec, distances
from .regressors import NnModel, NsmModel, evaluate_distances

TOL = 1e-12


def _record(mask_bad: np.ndarray, checked: int, describe, max_report: int) -> dict:
    bad = np.flatnonzero(mask_bad)
    return {
        "passed": bad.size == 0,
        "checked": int(checked),
        "violations": int(bad.size),
        "first": [describe(int(i)) for i in bad[:max_report]],
    }


def run_checks(d: Dataset, norm: NormSpec, L: float, grid, next_L: list | None = None,
               truth: SyntheticFunction | None = None, fastquery_points: int = 2000,
               max_report: int = 5) -> dict:
    """Run every pointwise invariant at estimate `L` on the grid.

    `next_L` lists larger estimates; local monotonicity and B-cell persistence
    are checked between consecutive members of ``[L] + next_L`` (default
    ``[2 L]``). `truth`, when given, adds ground-truth containment if `L`
    is at least its known Lipschitz bound.
    """
    nsm = NsmModel(d, L, norm)
    nn = NnModel(d, norm)
    g = _resolve_grid(d, grid)
    y = d.y
    D = distances(g.points, d.X, norm)
    ev = evaluate_distances(D, y, L)
    e = ev.error
    n, m, p = ev.ceiling_index, ev.floor_index, ev.voronoi_index
    bounds = ErrorBoundConstants.for_dataset(d)
    checks = {}

    # interpolation at the samples
    Ds = distances(d.X, d.X, norm)
    evs = evaluate_distances(Ds, y, L)
    # x_n lies in the closed cell B^n: both envelopes attain y_n there
    bad = (evs.nsm != y) | (evs.nn != y) | (evs.ceiling != y) | (evs.floor != y)
    checks["interpolation"] = _record(
        bad, len(d),
        lambda i: f"sample {i}: nsm={evs.nsm[i]!r} nn={evs.nn[i]!r} y={y[i]!r} "
                  f"cells=({evs.ceiling_index[i]},{evs.floor_index[i]})",
        max_report)

    is_b = ev.is_b
    rows = np.arange(len(g))
    dn, dp = D[rows, n], D[rows, p]
    # x must lie in the closed Voronoi cell of n; on an exact bisector the
    # rounded distances may hand the NN index to the other sample
    outside_vor = dn > dp + TOL * (1.0 + dp)
    bad = is_b & (outside_vor | (e != 0.0) | (ev.nsm != y[n]))
    checks["b_cells"] = _record(
        bad, int(is_b.sum()),
        lambda i: f"grid {i}: B({n[i]}) voronoi={p[i]} d=({dn[i]!r},{dp[i]!r}) e={e[i]!r}", max_report)

    outside = (~is_b) & (p != n) & (p != m)
    bad = outside & ((y[n] > y[p] + TOL) | (y[p] > y[m] + TOL))
    checks["ordering"] = _record(
        bad, int(outside.sum()),
        lambda i: f"grid {i}: A({n[i]},{m[i]}) p={p[i]} y=({y[n[i]]!r},{y[p[i]]!r},{y[m[i]]!r})",
        max_report)

    bad = np.abs(ev.nsm) > bounds.f_nsm_bound
    checks["nsm_bound"] = _record(
        bad, len(g), lambda i: f"grid {i}: |nsm|={abs(ev.nsm[i])!r} > {bounds.f_nsm_bound!r}",
        max_report)

    bad = (ev.floor > ev.nsm) | (ev.nsm > ev.ceiling)
    checks["sandwich"] = _record(
        bad, len(g), lambda i: f"grid {i}: {ev.floor[i]!r} <= {ev.nsm[i]!r} <= {ev.ceiling[i]!r}",
        max_report)

    fe = bounds.f_e_bound
    bad = np.abs(e) >= fe if fe > 0 else np.abs(e) > 0
    checks["error_bound"] = _record(
        bad, len(g), lambda i: f"grid {i}: |e|={abs(e[i])!r} vs F_e={fe!r}", max_report)

    closed = piecewise_error(ev, D, y, L)
    bad = np.abs(e - closed) > TOL
    checks["piecewise_identity"] = _record(
        bad, len(g), lambda i: f"grid {i}: {e[i]!r} vs {closed[i]!r}", max_report)

    sigma = float(np.count_nonzero(~is_b)) * g.cell_volume
    b_mass = float(np.count_nonzero(is_b)) * g.cell_volume
    l2sq = float(np.sum(e * e)) * g.cell_volume
    chain_ok = l2sq <= fe * fe * sigma * (1 + TOL)
    checks["quadrature_chain"] = {
        "passed": bool(chain_ok), "checked": 1, "violations": int(not chain_ok),
        "first": [] if chain_ok else [f"l2^2={l2sq!r} > F_e^2*sigma={fe * fe * sigma!r}"],
    }

    if truth is not None:
        L_star = truth.lipschitz_bound(norm, d.dim)
        if L >= L_star:
            f = truth(g.points)
            bad = (ev.floor > f) | (f > ev.ceiling)
            checks["ground_truth"] = _record(
                bad, len(g), lambda i: f"grid {i}: {ev.floor[i]!r} <= f={f[i]!r} <= {ev.ceiling[i]!r}",
                max_report)

    # consecutive estimates
    ladder = [L] + list(next_L if next_L else [2.0 * L])
    mono_bad, mono_first, mono_checked = 0, [], 0
    pers_bad, pers_first = 0, []
    prev_b = is_b
    for L0, L1 in zip(ladder, ladder[1:]):
        res = check_local_monotonicity(nsm.with_lipschitz(L0), nsm.with_lipschitz(L1), nn,
                                       g.points, max_report=max_report)
        mono_bad += len(res.violations)
        mono_checked += res.same_cell_checked + res.a_to_b_checked + res.index_changes_checked
        mono_first += [f"L {L0}->{L1} grid {v.point}: {v.rule} {v.detail}" for v in res.violations]
        cur_b = evaluate_distances(D, y, L1, p).is_b
        lost = np.flatnonzero(prev_b & ~cur_b)
        pers_bad += lost.size
        pers_first += [f"L {L0}->{L1} grid {int(i)} left B" for i in lost[:max_report]]
        prev_b = cur_b
    checks["local_monotonicity"] = {
        "passed": mono_bad == 0, "checked": mono_checked, "violations": mono_bad,
        "first": mono_first[:max_report],
    }
    checks["b_persistence"] = {
        "passed": pers_bad == 0, "checked": len(g) * (len(ladder) - 1), "violations": int(pers_bad),
        "first": pers_first[:max_report],
    }

    # exact index vs linear scan on an evenly spaced subset of the grid
    k = min(len(g), fastquery_points)
    sub = np.unique(np.linspace(0, len(g) - 1, k).round().astype(np.intp))
    tree = SpatialTree(d.X, y)
    fq_bad, fq_first = 0, []
    for mode in MODES:
        index = BiasedIndex(tree, mode, L, norm)
        ref_i, ref_v = linear_scan(d.X, y, g.points[sub], mode, L, norm)
        got_i, got_v = index.query_many(g.points[sub])
        wrong = np.flatnonzero((got_i != ref_i) | (got_v != ref_v))
        fq_bad += wrong.size
        fq_first += [f"{mode} grid {int(sub[j])}: {int(got_i[j])} vs scan {int(ref_i[j])}"
                     for j in wrong[:max_report]]
    checks["fastquery_equivalence"] = {
        "passed": fq_bad == 0, "checked": int(sub.size * len(MODES)), "violations": int(fq_bad),
        "first": fq_first[:max_report],
    }

    assumption = validate(d)
    return {
        "passed": all(c["passed"] for c in checks.values()),
        "L": L,
        "norm": norm.label,
        "grid_points_per_axis": g.spec.points_per_axis,
        "n_samples": len(d),
        "has_distinct_labels": assumption.has_distinct_labels,
        "sigma": sigma,
        "b_mass": b_mass,
        "l2_error": math.sqrt(l2sq),
        "sup_error": float(np.max(np.abs(e))),
        "checks": checks,
    }
